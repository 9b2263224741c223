#pragma once

#include <nlohmann/json.hpp>

#include "kbp/error.hpp"
#include "kbp/tensor.hpp"
#include "kbp/tn_io.hpp"

namespace kbp::detail {

inline nlohmann::json tensor_to_json(const Tensor& t) {
  return {{"legs", t.legs()}, {"dims", t.dims()}, {"scale_exp", t.scale_exp()},
          {"data", encode_payload(t.data())}};
}

inline Tensor tensor_from_json(const nlohmann::json& j) {
  try {
    auto legs = j.at("legs").get<std::vector<LegId>>();
    auto dims = j.at("dims").get<std::vector<std::size_t>>();
    long scale = j.value("scale_exp", 0L);
    auto data = decode_payload(j.at("data").get<std::string>());
    return Tensor(std::move(legs), std::move(dims), std::move(data), scale);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("tensor record: ") + e.what());
  }
}

}  // namespace kbp::detail
