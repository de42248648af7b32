#include "bsheet/field_io.hpp"

#include <json.hpp>

#include "bsheet/errors.hpp"

namespace bsheet {

using nlohmann::json;

namespace {

constexpr const char* kFieldFormat = "bsheet-field/1";

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidConfig(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string field_to_json(const FieldSample& field) {
  json j;
  j["format"] = kFieldFormat;
  j["N"] = field.spec().N;
  j["d"] = field.spec().d;
  j["provenance"] = field.provenance() == Provenance::exact ? "exact" : "grid";
  j["seed"] = field.seed().seed;
  j["stream"] = field.seed().stream;
  if (field.on_grid()) {
    const GridSpec& g = field.grid();
    j["grid"] = {{"lower", g.lower}, {"upper", g.upper}, {"cells", g.cells}};
  } else {
    json pts = json::array();
    for (const auto& p : field.points()) pts.push_back(p.coords());
    j["points"] = std::move(pts);
  }
  j["values"] = field.values();
  return j.dump();
}

FieldSample field_from_json(const std::string& text) {
  const json j = parse(text);
  try {
    if (j.value("format", std::string{}) != kFieldFormat) throw InvalidConfig("unknown field format");
    const SheetSpec spec{j.at("N").get<int>(), j.at("d").get<int>()};
    const std::string prov = j.at("provenance").get<std::string>();
    if (prov != "exact" && prov != "grid") throw InvalidConfig("provenance must be exact or grid");
    const SeedRecord seed{j.at("seed").get<std::uint64_t>(), j.at("stream").get<std::uint64_t>()};
    FieldSample::Layout layout;
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      GridSpec grid{g.at("lower").get<std::vector<double>>(), g.at("upper").get<std::vector<double>>(),
                    g.at("cells").get<std::vector<std::size_t>>()};
      layout = std::move(grid);
    } else {
      std::vector<ParamPoint> pts;
      for (const auto& p : j.at("points")) pts.emplace_back(p.get<std::vector<double>>());
      layout = std::move(pts);
    }
    return FieldSample(spec, std::move(layout), j.at("values").get<std::vector<double>>(),
                       prov == "exact" ? Provenance::exact : Provenance::grid, seed);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("bad field record: ") + e.what());
  } catch (const Error& e) {
    if (dynamic_cast<const InvalidConfig*>(&e)) throw;
    throw InvalidConfig(std::string("bad field record: ") + e.what());
  }
}

std::string measure_to_json(const DiscreteMeasure& mu) {
  json atoms = json::array();
  for (std::size_t i = 0; i < mu.support.size(); ++i) {
    const auto a = mu.support.atom(i);
    atoms.push_back(std::vector<double>(a.begin(), a.end()));
  }
  json j{{"atoms", std::move(atoms)}, {"weights", mu.weights}, {"h", mu.support.h}};
  return j.dump();
}

DiscreteMeasure measure_from_json(const std::string& text) {
  const json j = parse(text);
  try {
    DiscreteMeasure mu;
    mu.support.h = j.at("h").get<double>();
    const json& atoms = j.at("atoms");
    mu.support.dim = atoms.empty() ? 1 : static_cast<int>(atoms.front().size());
    for (const auto& a : atoms) {
      const auto x = a.get<std::vector<double>>();
      if (static_cast<int>(x.size()) != mu.support.dim) throw InvalidConfig("atoms of mixed dimension");
      mu.support.atoms.insert(mu.support.atoms.end(), x.begin(), x.end());
    }
    mu.weights = j.at("weights").get<std::vector<double>>();
    mu.validate();
    return mu;
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("bad measure record: ") + e.what());
  } catch (const DomainError& e) {
    throw InvalidConfig(std::string("bad measure record: ") + e.what());
  }
}

}  // namespace bsheet
