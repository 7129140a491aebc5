#include "modalkit/serialize.hpp"

#include <cmath>
#include <stdexcept>

#include "modalkit/csv.hpp"

namespace modalkit::io {

namespace {

void dump_value(const json& value, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent) * depth, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  switch (value.type()) {
    case json::value_t::object: {
      if (value.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      std::size_t i = 0;
      for (const auto& [key, item] : value.items()) {
        out += pad_in;
        out += json(key).dump();
        out += ": ";
        dump_value(item, out, indent, depth + 1);
        if (++i < value.size()) out += ',';
        out += '\n';
      }
      out += pad + "}";
      return;
    }
    case json::value_t::array: {
      if (value.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < value.size(); ++i) {
        out += pad_in;
        dump_value(value[i], out, indent, depth + 1);
        if (i + 1 < value.size()) out += ',';
        out += '\n';
      }
      out += pad + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = value.get<double>();
      if (!std::isfinite(v)) {
        throw std::runtime_error("refusing to serialize non-finite number");
      }
      out += format_double(v);
      return;
    }
    default:
      out += value.dump();
      return;
  }
}

json intervals_to_json(const std::vector<std::vector<uncertainty::Interval>>& intervals) {
  json out = json::array();
  for (const auto& per_point : intervals) {
    json row = json::array();
    for (const auto& iv : per_point) {
      row.push_back(json{{"lo", iv.lo}, {"hi", iv.hi}});
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

json to_json(const modes::ModalCurve& curve) {
  json out = json::array();
  for (std::size_t g = 0; g < curve.size(); ++g) {
    const auto& set = curve.sets[g];
    json modes_json = json::array();
    for (const auto& p : set.points) {
      modes_json.push_back(
          json{{"y", p.y}, {"density", p.density}, {"curvature", p.curvature}});
    }
    out.push_back(json{{"x", curve.grid[g]},
                       {"modes", std::move(modes_json)},
                       {"flagged", set.flagged}});
  }
  return out;
}

json to_json(const bandwidth::BandwidthChoice& choice) {
  const auto trace_json = [](const std::vector<bandwidth::TracePoint>& trace) {
    json out = json::array();
    for (const auto& t : trace) {
      out.push_back(json{{"h1", t.h1}, {"h2", t.h2}, {"criterion", t.criterion}});
    }
    return out;
  };
  json out{{"method", choice.method},
           {"h1", choice.h1},
           {"h2", choice.h2},
           {"boundary_minimizer", choice.boundary_minimizer},
           {"skipped_terms", choice.skipped_terms},
           {"trace", trace_json(choice.trace)}};
  if (!choice.trace_extra.empty()) {
    out["trace_extra"] = trace_json(choice.trace_extra);
    out["h1_star"] = choice.h1_star;
    out["h1_double_star"] = choice.h1_double_star;
  }
  return out;
}

json to_json(const uncertainty::PredictionBand& band) {
  return json{{"type", "prediction"},
              {"level", band.level},
              {"radius", band.radius},
              {"total_size", band.total_size},
              {"fallback_points", band.fallback_points},
              {"grid", band.grid},
              {"intervals", intervals_to_json(band.intervals)}};
}

json to_json(const uncertainty::ConfidenceBand& band) {
  return json{{"type", "confidence"},
              {"level", band.level},
              {"radius", band.radius},
              {"total_size", band.total_size},
              {"dropped_replicates", band.dropped_replicates},
              {"grid", band.grid},
              {"intervals", intervals_to_json(band.intervals)},
              {"deviations", band.deviations}};
}

json to_json(const metrics::ErrorReport& report) {
  json flagged = json::array();
  for (auto idx : report.flagged) flagged.push_back(idx);
  return json{{"grid", report.grid},
              {"pointwise", report.pointwise},
              {"mise", report.mise},
              {"uniform", report.uniform},
              {"flagged", std::move(flagged)}};
}

std::string dump_json(const json& value, int indent) {
  std::string out;
  dump_value(value, out, indent, 0);
  out += '\n';
  return out;
}

}  // namespace modalkit::io
