// ltsgat command-line driver.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ltsgat/autodiff/gradcheck_suite.hpp"
#include "ltsgat/eval/attention.hpp"
#include "ltsgat/eval/protocol.hpp"
#include "ltsgat/io/checkpoint.hpp"
#include "ltsgat/log.hpp"
#include "ltsgat/model/gradcheck_model.hpp"
#include "ltsgat/signal/synthetic.hpp"
#include "ltsgat/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ltsgat;

namespace {

constexpr int kExitOther = 1;
constexpr int kExitFoldFailed = 2;
constexpr int kExitDataFormat = 3;
constexpr int kExitUsage = 64;
constexpr int kExitConfig = 78;

// Overrides shared by the subcommands that build a model.
struct ModelFlags {
  std::string config_path;
  std::optional<std::string> preset, region_map, topology;
  std::optional<std::size_t> epochs, batch_size, d_h, gat_hidden, heads, gat_layers, folds;
  std::optional<double> learning_rate;
  std::vector<std::string> bands;
  bool no_temporal = false, no_spatial = false, da = false, no_da = false;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--preset", preset, "hci-dep, hci-indep, deap-dep, deap-indep or custom");
    sub->add_option("--epochs", epochs);
    sub->add_option("--batch-size", batch_size);
    sub->add_option("--lr", learning_rate);
    sub->add_option("--d-h", d_h);
    sub->add_option("--gat-hidden", gat_hidden);
    sub->add_option("--heads", heads);
    sub->add_option("--gat-layers", gat_layers);
    sub->add_option("--folds", folds);
    sub->add_option("--bands", bands, "band names to keep")->delimiter(',');
    sub->add_option("--region-map", region_map, "\"default\" or a JSON path");
    sub->add_option("--topology", topology, "\"full\" or a JSON path");
    sub->add_flag("--no-temporal", no_temporal, "replace temporal attention by segment averaging");
    sub->add_flag("--no-spatial", no_spatial, "skip the regional encoder");
    auto* on = sub->add_flag("--da", da, "enable domain adaptation");
    sub->add_flag("--no-da", no_da, "disable domain adaptation")->excludes(on);
  }

  json to_json(std::optional<std::uint64_t> seed, const std::optional<std::string>& dimension) const {
    json j = json::object();
    if (preset) j["preset"] = *preset;
    if (epochs) j["epochs"] = *epochs;
    if (batch_size) j["batch_size"] = *batch_size;
    if (learning_rate) j["learning_rate"] = *learning_rate;
    if (d_h) j["d_h"] = *d_h;
    if (gat_hidden) j["gat_hidden"] = *gat_hidden;
    if (heads) j["heads"] = *heads;
    if (gat_layers) j["gat_layers"] = *gat_layers;
    if (folds) j["folds"] = *folds;
    if (!bands.empty()) j["bands"] = bands;
    if (region_map) j["region_map"] = *region_map;
    if (topology) j["topology"] = *topology;
    if (no_temporal) j["disable_temporal"] = true;
    if (no_spatial) j["disable_spatial"] = true;
    if (da) j["domain_adaptation"] = true;
    if (no_da) j["domain_adaptation"] = false;
    if (seed) j["seed"] = *seed;
    if (dimension) j["dimension"] = *dimension;
    return j;
  }
};

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string log_level = "info";
};

// Loads features, keeps the configured bands and checks the shape against the config.
io::FeatureSet load_for(const fs::path& dir, train::TrainConfig& cfg) {
  io::FeatureSet set = io::load_features(dir);
  io::select_bands(set, cfg.bands);
  if (set.n != cfg.model.n || set.k != cfg.model.k) {
    throw io::ConfigError("config: n = " + std::to_string(cfg.model.n) + ", k = " + std::to_string(cfg.model.k) +
                          " but the features have n = " + std::to_string(set.n) + ", k = " + std::to_string(set.k));
  }
  return set;
}

std::vector<std::string> band_names(const io::FeatureSet& set) {
  std::vector<std::string> out;
  for (const auto& b : set.bands) out.push_back(b.name);
  return out;
}

json metrics_json(const eval::MetricsRecord& m) {
  return {{"accuracy", m.accuracy},
          {"f1_pos", m.f1_pos},
          {"f1_macro", m.f1_macro},
          {"confusion", {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"tn", m.confusion.tn}, {"fn", m.confusion.fn}}}};
}

// Applies a checkpoint's band selection and standardizer to a feature set.
std::vector<signal::FeatureSample> prepare_for_checkpoint(const io::Checkpoint& ck, const fs::path& features,
                                                          const std::string& participant) {
  io::FeatureSet set = io::load_features(features);
  try {
    io::select_bands(set, ck.bands);
  } catch (const io::ConfigError& e) {
    throw io::DataFormatError(std::string(e.what()) + " (required by the checkpoint)");
  }
  const model::ModelConfig& mc = ck.model.config();
  if (set.n != mc.n || set.k != mc.k || set.d_b() != mc.d_b) {
    throw io::DataFormatError(features.string() + ": feature shape does not match the checkpoint");
  }
  std::vector<signal::FeatureSample> out;
  for (auto& s : set.samples) {
    if (!participant.empty() && s.participant != participant) continue;
    if (ck.standardizer) ck.standardizer->apply(s);
    out.push_back(std::move(s));
  }
  if (out.empty()) throw io::DataFormatError(features.string() + ": no samples selected");
  return out;
}

int cmd_synth(const Globals& g, signal::SynthOptions opt, const fs::path& out) {
  opt.seed = g.seed.value_or(0);
  const model::RegionMap map = io::resolve_region_map("default");
  if (opt.planted_channels.empty()) opt.planted_channels = signal::default_planted_channels(map);
  signal::SyntheticDataset synth = signal::gen_synthetic(opt);
  io::Dataset data;
  data.channel_names = synth.channel_names;
  data.sampling_rate = synth.sampling_rate;
  data.trials = std::move(synth.trials);
  data.config = {{"generator", "synthetic"},
                 {"seed", opt.seed},
                 {"participants", opt.participants},
                 {"trials_per_participant", opt.trials_per_participant},
                 {"separation", opt.separation},
                 {"domain_shift", opt.domain_shift},
                 {"sampling_rate", opt.sampling_rate},
                 {"duration_s", opt.duration_s},
                 {"planted_channels", opt.planted_channels}};
  io::write_dataset(out, data);
  log::info("cli", "synthetic dataset written", {{"out", out.string()}, {"trials", data.trials.size()}});
  return 0;
}

int cmd_extract(const fs::path& in, const fs::path& out, const std::vector<std::string>& bands, std::size_t k,
                std::size_t samples_per_trial, bool inclusive) {
  const io::Dataset data = io::load_dataset(in);
  signal::ExtractOptions opt;
  opt.k = k;
  opt.samples_per_trial = samples_per_trial;
  opt.rating_threshold_inclusive = inclusive;
  if (!bands.empty()) {
    opt.bands.clear();
    for (const std::string& b : bands) {
      try {
        opt.bands.push_back(signal::band_by_name(b));
      } catch (const std::exception& e) {
        throw io::ConfigError(e.what());
      }
    }
  }
  io::FeatureSet set;
  set.n = data.channel_names.size();
  set.k = k;
  set.bands = opt.bands;
  set.channel_names = data.channel_names;
  set.config = {{"source", in.string()},
                {"k", k},
                {"samples_per_trial", samples_per_trial},
                {"rating_threshold_inclusive", inclusive},
                {"bands", io::bands_to_json(opt.bands)}};
  for (const auto& t : data.trials)
    for (auto& s : signal::extract_features(t, opt)) set.samples.push_back(std::move(s));
  io::write_features(out, set);
  log::info("cli", "features written", {{"out", out.string()}, {"samples", set.samples.size()}});
  return 0;
}

int cmd_train(train::TrainConfig cfg, const fs::path& features, const fs::path& out, const std::string& target) {
  io::FeatureSet set = load_for(features, cfg);
  if (cfg.model.domain_adaptation && target.empty()) {
    throw io::ConfigError("config: domain adaptation needs --target <participant>");
  }
  std::vector<signal::FeatureSample> source, tgt;
  for (auto& s : set.samples) (s.participant == target ? tgt : source).push_back(std::move(s));
  if (!target.empty() && tgt.empty()) throw io::DataFormatError(features.string() + ": no samples for " + target);
  if (source.empty()) throw io::DataFormatError(features.string() + ": no training samples");

  const signal::Standardizer st = signal::Standardizer::fit(source);
  for (auto& s : source) st.apply(s);
  for (auto& s : tgt) st.apply(s);

  model::LtsGat net = io::make_model(cfg, set.d_b());
  const std::vector<std::string> names = band_names(set);
  fs::create_directories(out);
  io::write_json(out / "config.json", io::to_json(cfg));
  try {
    const train::TrainHistory hist =
        train::train(net, source, cfg.model.domain_adaptation ? std::span<const signal::FeatureSample>(tgt)
                                                              : std::span<const signal::FeatureSample>(),
                     cfg);
    hist.write_csv(out / "history.csv");
    io::write_checkpoint(out, net, cfg, names, st);
  } catch (const train::TrainingDiverged& e) {
    net.params().unflatten(e.last_good);
    io::write_checkpoint(out, net, cfg, names, st);
    log::error("cli", "training diverged; last good parameters written",
               {{"epoch", e.epoch}, {"batch", e.batch}, {"reason", e.what()}});
    return kExitOther;
  }
  log::info("cli", "checkpoint written", {{"out", out.string()}});
  return 0;
}

int cmd_eval(const fs::path& model_dir, const fs::path& features, const fs::path& out, const std::string& participant) {
  const io::Checkpoint ck = io::load_checkpoint(model_dir);
  const std::vector<signal::FeatureSample> samples = prepare_for_checkpoint(ck, features, participant);
  const eval::MetricsRecord m = eval::evaluate(ck.model, samples, ck.config.dimension);
  json report = {{"schema_version", io::kSchemaVersion},
                 {"model", model_dir.string()},
                 {"features", features.string()},
                 {"participant", participant.empty() ? json(nullptr) : json(participant)},
                 {"dimension", ck.config.dimension},
                 {"sample_count", samples.size()},
                 {"metrics", metrics_json(m)},
                 {"config", io::to_json(ck.config)}};
  if (out.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    io::write_json(out, report);
  }
  return 0;
}

int cmd_cv(eval::Paradigm paradigm, train::TrainConfig cfg, const fs::path& features, const fs::path& out,
           const std::string& dimension, std::size_t threads) {
  io::FeatureSet set = load_for(features, cfg);
  eval::ProtocolOptions opt;
  opt.threads = threads;
  if (dimension == "both") opt.dimensions = {"valence", "arousal"};
  const model::LtsGat prototype = io::make_model(cfg, set.d_b());
  const eval::ProtocolResult r = eval::run_protocol(set.samples, paradigm, cfg, prototype, opt);

  fs::create_directories(out);
  json echo = io::to_json(cfg);
  echo["paradigm"] = eval::to_string(paradigm);
  echo["dimensions"] = opt.dimensions.empty() ? std::vector<std::string>{cfg.dimension} : opt.dimensions;
  echo["features"] = features.string();
  echo["feature_config"] = set.config;
  io::write_json(out / "config.json", echo);
  std::ofstream csv(out / "summary.csv", std::ios::binary);
  csv << r.summary_csv();
  if (!csv) throw std::runtime_error("cannot write " + (out / "summary.csv").string());

  json folds = json::array();
  for (const eval::Fold& f : r.plan) {
    json train = json::array(), test = json::array();
    for (const auto& [p, t] : f.train) train.push_back({p, t});
    for (const auto& [p, t] : f.test) test.push_back({p, t});
    folds.push_back({{"id", f.id}, {"participant", f.participant}, {"train", train}, {"test", test}});
  }
  io::write_json(out / "folds.json", {{"schema_version", io::kSchemaVersion}, {"folds", folds}});

  for (const std::string& d : echo["dimensions"].get<std::vector<std::string>>()) {
    const eval::MetricsRecord avg = r.average(d);
    log::info("cli", "cross-validation done",
              {{"paradigm", eval::to_string(paradigm)}, {"dimension", d}, {"accuracy", avg.accuracy}, {"f1", avg.f1_pos}});
  }
  if (r.any_failed()) {
    for (const eval::FoldResult& f : r.folds)
      if (!f.ok) log::error("cli", "fold failed", {{"participant", f.participant}, {"fold", f.fold}, {"error", f.error}});
    return kExitFoldFailed;
  }
  return 0;
}

int cmd_export_attention(const fs::path& model_dir, const fs::path& features, const fs::path& out,
                         const std::string& participant) {
  const io::Checkpoint ck = io::load_checkpoint(model_dir);
  const std::vector<signal::FeatureSample> samples = prepare_for_checkpoint(ck, features, participant);
  const eval::AttentionReport rep = eval::attention_report(ck.model, train::pointers(samples), ck.bands);
  eval::export_attention(rep, out);
  io::write_json(out / "config.json", {{"model", model_dir.string()},
                                       {"features", features.string()},
                                       {"participant", participant.empty() ? json(nullptr) : json(participant)},
                                       {"sample_count", samples.size()},
                                       {"config", io::to_json(ck.config)}});
  return 0;
}

int cmd_gradcheck(const Globals& g) {
  const std::uint64_t seed = g.seed.value_or(0);
  bool all = true;
  for (const ad::PrimitiveCase& c : ad::primitive_cases()) {
    const ad::GradCheckReport r = ad::check_primitive(c, seed);
    all = all && r.pass;
    std::printf("%-24s %.3e %s\n", c.name.c_str(), r.max_relative_error, r.pass ? "ok" : "FAIL");
  }
  const ad::GradCheckReport e = model::end_to_end_grad_check(seed);
  all = all && e.pass;
  std::printf("%-24s %.3e %s\n", "end-to-end", e.max_relative_error, e.pass ? "ok" : "FAIL");
  return all ? 0 : kExitOther;
}

std::optional<log::Level> parse_level(const std::string& s) {
  if (s == "debug") return log::Level::Debug;
  if (s == "info") return log::Level::Info;
  if (s == "warn") return log::Level::Warn;
  if (s == "error") return log::Level::Error;
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LTS-GAT: EEG emotion recognition with temporal, spatial and graph attention"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "base random seed");
  app.add_option("--log-level", g.log_level, "debug, info, warn or error");

  fs::path in, out, features, model_dir;
  std::string target, participant, dimension;
  std::size_t threads = 0;

  auto* synth = app.add_subcommand("synth", "generate a labeled synthetic dataset");
  signal::SynthOptions synth_opt;
  synth->add_option("--participants", synth_opt.participants);
  synth->add_option("--trials", synth_opt.trials_per_participant, "trials per participant");
  synth->add_option("--separation", synth_opt.separation, "class effect size");
  synth->add_option("--shift", synth_opt.domain_shift, "per-participant channel gain spread");
  synth->add_option("--duration", synth_opt.duration_s, "seconds per trial");
  synth->add_option("--rate", synth_opt.sampling_rate, "sampling rate in Hz");
  synth->add_option("--out", out)->required();

  auto* extract = app.add_subcommand("extract", "differential-entropy features from a dataset");
  std::vector<std::string> extract_bands;
  std::size_t k = 10, per_trial = 3;
  bool inclusive = false;
  extract->add_option("--in", in)->required();
  extract->add_option("--out", out)->required();
  extract->add_option("--bands", extract_bands, "theta, alpha, beta, gamma")->delimiter(',');
  extract->add_option("--k", k, "segments per sample");
  extract->add_option("--samples-per-trial", per_trial);
  extract->add_flag("--inclusive-threshold", inclusive, "label ratings equal to 5 as high");

  ModelFlags mflags;
  std::optional<std::string> dim_flag;

  auto* trn = app.add_subcommand("train", "train one model and write a checkpoint");
  mflags.attach(trn);
  trn->add_option("--features", features)->required();
  trn->add_option("--out", out)->required();
  trn->add_option("--target", target, "participant held out as the unlabeled target domain");
  trn->add_option("--dimension", dim_flag, "valence or arousal");

  auto* evl = app.add_subcommand("eval", "evaluate a checkpoint");
  evl->add_option("--model", model_dir)->required();
  evl->add_option("--features", features)->required();
  evl->add_option("--out", out, "JSON report path; stdout when omitted");
  evl->add_option("--participant", participant);

  auto* cv_dep = app.add_subcommand("cv-dependent", "subject-dependent cross-validation");
  auto* cv_ind = app.add_subcommand("cv-independent", "leave-one-participant-out cross-validation");
  for (CLI::App* cv : {cv_dep, cv_ind}) {
    mflags.attach(cv);
    cv->add_option("--features", features)->required();
    cv->add_option("--out", out)->required();
    cv->add_option("--dimension", dimension, "valence, arousal or both")->default_val("both");
    cv->add_option("--threads", threads, "worker threads; 0 uses LTSGAT_THREADS or all cores");
  }

  auto* exp = app.add_subcommand("export-attention", "write attention weights for a checkpoint");
  exp->add_option("--model", model_dir)->required();
  exp->add_option("--features", features)->required();
  exp->add_option("--out", out)->required();
  exp->add_option("--participant", participant);

  auto* gc = app.add_subcommand("gradcheck", "finite-difference checks of the autodiff and the model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }
  const auto level = parse_level(g.log_level);
  if (!level) {
    std::cerr << "--log-level: expected debug, info, warn or error\n";
    return kExitUsage;
  }
  log::set_level(*level);

  try {
    auto resolve = [&](const std::optional<std::string>& dim) {
      return io::load_config(mflags.config_path, mflags.to_json(g.seed, dim));
    };
    if (synth->parsed()) return cmd_synth(g, synth_opt, out);
    if (extract->parsed()) return cmd_extract(in, out, extract_bands, k, per_trial, inclusive);
    if (trn->parsed()) return cmd_train(resolve(dim_flag), features, out, target);
    if (evl->parsed()) return cmd_eval(model_dir, features, out, participant);
    if (cv_dep->parsed() || cv_ind->parsed()) {
      if (dimension != "both" && dimension != "valence" && dimension != "arousal") {
        throw io::ConfigError("config: --dimension must be valence, arousal or both");
      }
      const auto paradigm = cv_dep->parsed() ? eval::Paradigm::Dependent : eval::Paradigm::Independent;
      return cmd_cv(paradigm, resolve(dimension == "both" ? std::nullopt : std::optional(dimension)), features, out,
                    dimension, threads);
    }
    if (exp->parsed()) return cmd_export_attention(model_dir, features, out, participant);
    if (gc->parsed()) return cmd_gradcheck(g);
  } catch (const io::ConfigError& e) {
    log::error("cli", e.what());
    return kExitConfig;
  } catch (const model::RegionMapError& e) {
    log::error("cli", e.what());
    return kExitConfig;
  } catch (const model::TopologyError& e) {
    log::error("cli", e.what());
    return kExitConfig;
  } catch (const io::DataFormatError& e) {
    log::error("cli", e.what());
    return kExitDataFormat;
  } catch (const std::exception& e) {
    log::error("cli", e.what());
    return kExitOther;
  }
  return kExitUsage;
}
