#pragma once

// Temporal and regional importances of a trained model, per sample and
// averaged, written as CSV:
//   temporal.csv          participant,trial,index,band,s1..sk
//   temporal_summary.csv  band,s1..sk
//   regions.csv           participant,trial,index,<region>...
//   regions_summary.csv   region,importance

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ltsgat/train/inference.hpp"

namespace ltsgat::eval {

using signal::FeatureSample;

struct AttentionReport {
  std::vector<std::string> bands;    // band names; "mean" is added on output
  std::vector<std::string> regions;  // region names
  std::vector<const FeatureSample*> samples;
  std::vector<std::vector<std::vector<double>>> temporal;  // [sample][band] k values
  std::vector<std::vector<double>> region;                 // [sample] N values

  bool has_temporal() const { return !temporal.empty(); }
  bool has_regions() const { return !region.empty(); }

  // Per sample, averaged over bands; sums to k.
  std::vector<double> temporal_mean(std::size_t sample) const {
    const auto& per_band = temporal.at(sample);
    std::vector<double> out(per_band.front().size(), 0.0);
    for (const auto& v : per_band)
      for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i] / static_cast<double>(per_band.size());
    return out;
  }

  // Averaged over samples, for one band or (band = bands.size()) the band mean.
  std::vector<double> temporal_average(std::size_t band) const {
    std::vector<double> out;
    for (std::size_t s = 0; s < temporal.size(); ++s) {
      const std::vector<double> v = band < bands.size() ? temporal[s][band] : temporal_mean(s);
      if (out.empty()) out.assign(v.size(), 0.0);
      for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i] / static_cast<double>(temporal.size());
    }
    return out;
  }

  std::vector<double> region_average() const {
    std::vector<double> out(regions.size(), 0.0);
    for (const auto& v : region)
      for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i] / static_cast<double>(region.size());
    return out;
  }
};

inline AttentionReport attention_report(const model::LtsGat& net, std::span<const FeatureSample* const> samples,
                                        std::vector<std::string> band_names = {}, std::size_t chunk = 64) {
  AttentionReport rep;
  const model::ModelConfig& c = net.config();
  if (band_names.empty())
    for (std::size_t b = 0; b < c.d_b; ++b) band_names.push_back("band" + std::to_string(b));
  if (band_names.size() != c.d_b) throw std::invalid_argument("attention_report: band names do not match d_b");
  rep.bands = std::move(band_names);
  for (const model::Region& r : net.region_map().regions()) rep.regions.push_back(r.name);
  rep.samples.assign(samples.begin(), samples.end());
  train::for_each_chunk(net, samples, chunk,
                        [&](std::size_t, const model::ForwardResult& r, const model::BoundParameters&) {
                          for (const auto& bands : r.temporal_weights) {
                            std::vector<std::vector<double>> per_band;
                            for (const ad::Var& w : bands) per_band.push_back(model::temporal_importance(w.value()));
                            rep.temporal.push_back(std::move(per_band));
                          }
                          for (const ad::Var& w : r.region_weights)
                            rep.region.push_back(model::region_importance(w.value()));
                        });
  return rep;
}

namespace detail {
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

inline std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}
}  // namespace detail

// Writes the files for whichever attention modules the model has.
inline void export_attention(const AttentionReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  if (rep.has_temporal()) {
    const std::size_t k = rep.temporal.front().front().size();
    std::string header = "participant,trial,index,band";
    for (std::size_t i = 1; i <= k; ++i) header += ",s" + std::to_string(i);
    std::ofstream f = detail::open_csv(dir / "temporal.csv");
    f << header << '\n';
    for (std::size_t s = 0; s < rep.samples.size(); ++s) {
      for (std::size_t b = 0; b <= rep.bands.size(); ++b) {
        const FeatureSample& x = *rep.samples[s];
        f << x.participant << ',' << x.trial << ',' << x.index << ',' << (b < rep.bands.size() ? rep.bands[b] : "mean");
        const std::vector<double> v = b < rep.bands.size() ? rep.temporal[s][b] : rep.temporal_mean(s);
        for (double w : v) f << ',' << detail::fmt(w);
        f << '\n';
      }
    }
    std::ofstream g = detail::open_csv(dir / "temporal_summary.csv");
    g << header.substr(std::string("participant,trial,index,").size()) << '\n';
    for (std::size_t b = 0; b <= rep.bands.size(); ++b) {
      g << (b < rep.bands.size() ? rep.bands[b] : "mean");
      for (double w : rep.temporal_average(b)) g << ',' << detail::fmt(w);
      g << '\n';
    }
  }
  if (rep.has_regions()) {
    std::ofstream f = detail::open_csv(dir / "regions.csv");
    f << "participant,trial,index";
    for (const std::string& r : rep.regions) f << ',' << r;
    f << '\n';
    for (std::size_t s = 0; s < rep.samples.size(); ++s) {
      const FeatureSample& x = *rep.samples[s];
      f << x.participant << ',' << x.trial << ',' << x.index;
      for (double w : rep.region[s]) f << ',' << detail::fmt(w);
      f << '\n';
    }
    std::ofstream g = detail::open_csv(dir / "regions_summary.csv");
    g << "region,importance\n";
    const std::vector<double> avg = rep.region_average();
    for (std::size_t i = 0; i < rep.regions.size(); ++i) g << rep.regions[i] << ',' << detail::fmt(avg[i]) << '\n';
  }
}

}  // namespace ltsgat::eval
