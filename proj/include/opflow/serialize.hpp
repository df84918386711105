#pragma once

// JSON payloads.
//
//   Element:        { "blocks": [ [ [re, im], ... row-major ... ], ... ] }
//   FlowGenerator:  { "kind": "automorphism" | "two-sided", "left": Element, "right": Element }
//   ModuleOperator: { "k": k, "entries": [ [ Element, ... k ], ... k ] }
//
// Doubles are written in shortest round-trip form, so finite values survive
// a write/read cycle bit-exactly.

#include <cmath>
#include <string>

#include "json.hpp"

#include "opflow/flows.hpp"
#include "opflow/hilbmod.hpp"

namespace opflow {

using json = nlohmann::json;

inline json to_json(const Element& x)
{
  json blocks = json::array();
  for (const Matrix& m : x.blocks()) {
    json entries = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) entries.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    }
    blocks.push_back(std::move(entries));
  }
  return json{{"blocks", std::move(blocks)}};
}

inline Element element_from_json(const json& j)
{
  if (!j.is_object() || !j.contains("blocks") || !j["blocks"].is_array() || j["blocks"].empty()) {
    throw Error(ErrorCode::ParseError, "element needs a non-empty \"blocks\" array");
  }
  std::vector<Index> dims;
  std::vector<Matrix> blocks;
  for (const json& b : j["blocks"]) {
    if (!b.is_array()) throw Error(ErrorCode::ParseError, "block must be an array of [re, im]");
    const auto count = static_cast<Index>(b.size());
    const auto n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(count))));
    if (n < 1 || n * n != count) {
      throw Error(ErrorCode::ParseError, "block has " + std::to_string(count) + " entries, not a square");
    }
    Matrix m(n, n);
    for (Index e = 0; e < count; ++e) {
      const json& z = b[static_cast<std::size_t>(e)];
      if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number()) {
        throw Error(ErrorCode::ParseError, "entry must be [re, im]");
      }
      m(e / n, e % n) = cplx(z[0].get<double>(), z[1].get<double>());
    }
    dims.push_back(n);
    blocks.push_back(std::move(m));
  }
  return {BlockShape(std::move(dims)), std::move(blocks)};
}

inline json to_json(const FlowGenerator& g)
{
  return json{{"kind", g.is_automorphism() ? "automorphism" : "two-sided"},
              {"left", to_json(g.left().value())},
              {"right", to_json(g.right().value())}};
}

inline FlowGenerator flow_from_json(const json& j)
{
  if (!j.is_object() || !j.contains("left") || !j.contains("right")) {
    throw Error(ErrorCode::ParseError, "flow needs \"left\" and \"right\"");
  }
  const Element left = element_from_json(j["left"]);
  const Element right = element_from_json(j["right"]);
  FlowGenerator g{Hermitian(left), Hermitian(right)};
  if (j.contains("kind")) {
    const std::string kind = j["kind"].get<std::string>();
    if (kind != "automorphism" && kind != "two-sided") {
      throw Error(ErrorCode::ParseError, "unknown flow kind \"" + kind + "\"");
    }
    if (kind == "automorphism" && !(left == right)) {
      throw Error(ErrorCode::ParseError, "\"automorphism\" flow with different generators");
    }
  }
  return g;
}

inline json to_json(const ModuleOperator& s)
{
  json grid = json::array();
  for (const auto& row : s.grid()) {
    json r = json::array();
    for (const Element& e : row) r.push_back(to_json(e));
    grid.push_back(std::move(r));
  }
  return json{{"k", s.k()}, {"entries", std::move(grid)}};
}

inline ModuleOperator module_operator_from_json(const json& j)
{
  if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array()) {
    throw Error(ErrorCode::ParseError, "module operator needs an \"entries\" grid");
  }
  std::vector<std::vector<Element>> grid;
  for (const json& row : j["entries"]) {
    if (!row.is_array()) throw Error(ErrorCode::ParseError, "grid row must be an array");
    std::vector<Element> r;
    for (const json& e : row) r.push_back(element_from_json(e));
    grid.push_back(std::move(r));
  }
  if (j.contains("k") && j["k"].get<std::size_t>() != grid.size()) {
    throw Error(ErrorCode::ParseError, "\"k\" does not match the grid size");
  }
  return ModuleOperator::from_grid(grid);
}

}  // namespace opflow
