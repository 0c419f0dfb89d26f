#include "sat/nn/params.hpp"

#include <cstring>

#include "sat/error.hpp"
#include "sat/hash.hpp"

namespace sat::nn {

std::string hash_params(const NamedParams& params) {
  std::string buf;
  for (const auto& [name, p] : params) {
    buf += name;
    buf += '\0';
    const Matrix& v = p.value();
    const std::int64_t shape[2] = {v.rows(), v.cols()};
    buf.append(reinterpret_cast<const char*>(shape), sizeof(shape));
    buf.append(reinterpret_cast<const char*>(v.data()),
               static_cast<std::size_t>(v.size()) * sizeof(double));
  }
  return sha256_hex(buf);
}

std::size_t count_params(const NamedParams& params) {
  std::size_t n = 0;
  for (const auto& [name, p] : params) n += static_cast<std::size_t>(p.value().size());
  return n;
}

nlohmann::json params_to_json(const NamedParams& params) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, p] : params) {
    const Matrix& v = p.value();
    std::vector<double> data(v.data(), v.data() + v.size());
    out[name] = {{"rows", v.rows()}, {"cols", v.cols()}, {"data", data}};
  }
  return out;
}

void params_from_json(const nlohmann::json& j, const NamedParams& params) {
  for (const auto& [name, p] : params) {
    if (!j.contains(name)) throw ValidationError("missing parameter " + name);
    const auto& e = j.at(name);
    const auto rows = e.at("rows").get<Eigen::Index>();
    const auto cols = e.at("cols").get<Eigen::Index>();
    const auto data = e.at("data").get<std::vector<double>>();
    Tensor t = p;
    if (rows != t.rows() || cols != t.cols() ||
        static_cast<Eigen::Index>(data.size()) != rows * cols) {
      throw ValidationError("shape mismatch for parameter " + name);
    }
    std::memcpy(t.mutable_value().data(), data.data(), data.size() * sizeof(double));
  }
}

}  // namespace sat::nn
