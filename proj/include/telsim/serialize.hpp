#pragma once

// Machine-readable debug dumps: amplitudes and coefficients as [re, im]
// pairs, factors as coefficient arrays. Used by golden-file tests and the
// CLI's JSON reports.

#include <nlohmann/json.hpp>

#include "telsim/fock.hpp"

namespace telsim {

inline nlohmann::json to_json(const Complex& z) {
  return nlohmann::json::array({z.real(), z.imag()});
}

inline nlohmann::json to_json(const ModeVector& v) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) coeffs.push_back(to_json(v(i)));
  return coeffs;
}

inline nlohmann::json to_json(const FockVector& v) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : v.terms()) {
    nlohmann::json factors = nlohmann::json::array();
    for (const auto& f : t.factors) factors.push_back(to_json(f));
    terms.push_back({{"amplitude", to_json(t.amplitude)}, {"factors", std::move(factors)}});
  }
  return {{"modes", v.modes()}, {"ambient_dim", v.ambient_dim()}, {"terms", std::move(terms)}};
}

inline nlohmann::json to_json(const DensityOperator& op) {
  nlohmann::json summands = nlohmann::json::array();
  for (const auto& s : op.summands)
    summands.push_back({{"weight", to_json(s.weight)},
                        {"ket", to_json(s.ket)},
                        {"bra", to_json(s.bra)}});
  return {{"modes", op.modes}, {"ambient_dim", op.ambient}, {"summands", std::move(summands)}};
}

}  // namespace telsim
