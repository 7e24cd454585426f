#pragma once

// JSON form of states and operators:
//   {"modes": [{"label": "a", "cutoff": 3}, ...],
//    "kind": "pure" | "mixed" | "operator",
//    "entries": [[index, re, im], ...]}
// Matrix entries use the flat index row * dim + col. Zero entries are omitted.

#include <cstdint>
#include <string>

#include <json.hpp>

#include "hsim/fock_core.hpp"

namespace hsim {

namespace detail {

inline nlohmann::json modes_to_json(const HilbertSpace& space) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : space.modes())
    modes.push_back({{"label", m.label}, {"cutoff", m.cutoff}});
  return modes;
}

inline HilbertSpace modes_from_json(const nlohmann::json& j) {
  std::vector<Mode> modes;
  for (const auto& m : j.at("modes"))
    modes.push_back({m.at("label").get<std::string>(), m.at("cutoff").get<int>()});
  return HilbertSpace(std::move(modes));
}

}  // namespace detail

inline nlohmann::json to_json(const QuantumState& state) {
  nlohmann::json entries = nlohmann::json::array();
  if (state.is_pure()) {
    const Vector& v = state.amplitudes();
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (v(i) != cplx(0.0)) entries.push_back({i, v(i).real(), v(i).imag()});
  } else {
    const DenseMatrix& r = state.stored_density();
    const auto d = r.rows();
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        if (r(i, j) != cplx(0.0))
          entries.push_back({i * d + j, r(i, j).real(), r(i, j).imag()});
  }
  return {{"modes", detail::modes_to_json(state.space())},
          {"kind", state.is_pure() ? "pure" : "mixed"},
          {"entries", std::move(entries)}};
}

inline nlohmann::json to_json(const LinearOperator& op) {
  nlohmann::json entries = nlohmann::json::array();
  const auto d = static_cast<std::int64_t>(op.dim());
  const SparseMatrix& m = op.matrix();
  for (Eigen::Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it)
      entries.push_back({static_cast<std::int64_t>(it.row()) * d + c,
                         it.value().real(), it.value().imag()});
  return {{"modes", detail::modes_to_json(op.space())},
          {"kind", "operator"},
          {"entries", std::move(entries)}};
}

inline QuantumState state_from_json(const nlohmann::json& j) {
  HilbertSpace space = detail::modes_from_json(j);
  const std::string kind = j.at("kind").get<std::string>();
  const auto d = static_cast<std::int64_t>(space.dim());
  if (kind == "pure") {
    Vector v = Vector::Zero(d);
    for (const auto& e : j.at("entries")) {
      const auto i = e.at(0).get<std::int64_t>();
      if (i < 0 || i >= d) throw SpaceError("state entry index out of range");
      v(i) = cplx(e.at(1).get<double>(), e.at(2).get<double>());
    }
    return QuantumState::pure(std::move(space), std::move(v));
  }
  if (kind == "mixed") {
    DenseMatrix r = DenseMatrix::Zero(d, d);
    for (const auto& e : j.at("entries")) {
      const auto i = e.at(0).get<std::int64_t>();
      if (i < 0 || i >= d * d) throw SpaceError("state entry index out of range");
      r(i / d, i % d) = cplx(e.at(1).get<double>(), e.at(2).get<double>());
    }
    return QuantumState::mixed(std::move(space), std::move(r));
  }
  throw std::invalid_argument("unknown state kind '" + kind + "'");
}

inline LinearOperator operator_from_json(const nlohmann::json& j) {
  HilbertSpace space = detail::modes_from_json(j);
  if (j.at("kind").get<std::string>() != "operator")
    throw std::invalid_argument("expected kind 'operator'");
  const auto d = static_cast<std::int64_t>(space.dim());
  std::vector<Eigen::Triplet<cplx>> trips;
  for (const auto& e : j.at("entries")) {
    const auto i = e.at(0).get<std::int64_t>();
    if (i < 0 || i >= d * d) throw SpaceError("operator entry index out of range");
    trips.emplace_back(static_cast<Eigen::Index>(i / d),
                       static_cast<Eigen::Index>(i % d),
                       cplx(e.at(1).get<double>(), e.at(2).get<double>()));
  }
  SparseMatrix m(d, d);
  m.setFromTriplets(trips.begin(), trips.end());
  return {std::move(space), std::move(m)};
}

}  // namespace hsim
