#pragma once

#include <nlohmann/json.hpp>

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sat/nn/tensor.hpp"

namespace sat::nn {

using ParamVisitor = std::function<void(const std::string& name, Tensor& p)>;

// Anything exposing `visit_params(const ParamVisitor&)` participates in
// cloning, hashing, freezing and serialisation.
template <typename M>
concept HasParams = requires(M& m, const ParamVisitor& v) { m.visit_params(v); };

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

template <HasParams M>
NamedParams collect_params(M& m) {
  NamedParams out;
  m.visit_params([&](const std::string& n, Tensor& p) { out.emplace_back(n, p); });
  return out;
}

// Replaces every parameter with a fresh leaf holding a copy of its value, so
// the model no longer shares storage with whatever it was copied from.
template <HasParams M>
void detach_params(M& m) {
  m.visit_params([](const std::string&, Tensor& p) {
    const bool rg = p.requires_grad();
    p = Tensor::leaf(p.value(), rg);
  });
}

template <HasParams M>
void set_trainable(M& m, bool trainable) {
  m.visit_params([&](const std::string&, Tensor& p) { p.set_requires_grad(trainable); });
}

std::string hash_params(const NamedParams& params);

template <HasParams M>
std::string params_hash(M& m) {
  return hash_params(collect_params(m));
}

std::size_t count_params(const NamedParams& params);

nlohmann::json params_to_json(const NamedParams& params);
// Copies values from `j` into the (already shaped) parameters in place.
void params_from_json(const nlohmann::json& j, const NamedParams& params);

}  // namespace sat::nn
