#include "calguard/cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "calguard/abstain.hpp"
#include "calguard/calibration.hpp"
#include "calguard/errors.hpp"
#include "calguard/itmac/channel.hpp"
#include "calguard/mirage.hpp"
#include "calguard/region_widgets.hpp"
#include "calguard/rng.hpp"
#include "calguard/zk/audit.hpp"

namespace calguard::cli {

namespace fs = std::filesystem;
using nlohmann::json;

nets::ModelParams train_classifier(const data::Dataset& train, const TrainOptions& opt,
                                   std::uint64_t seed) {
  if (train.is_regression()) throw InvalidInput("train_classifier: dataset has real targets");
  const bool carve = opt.calibrate && opt.val_fraction > 0.0;
  data::Dataset fit = train;
  data::Dataset val;
  if (carve) std::tie(fit, val) = data::split(train, opt.val_fraction, derive_seed(seed, "val"));

  auto model = nets::init_model(train.dims, opt.hidden, static_cast<std::size_t>(train.num_classes),
                                seed);
  nets::OptConfig cfg = opt.opt;
  cfg.seed = seed;
  model = nets::train_ce(std::move(model), fit, cfg);
  if (carve) {
    if (val.empty()) throw InvalidInput("train_classifier: validation carve-out is empty");
    model.temperature = nets::fit_temperature(model, val);
  }
  return model;
}

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IngestionError("'" + path + "': " + e.what());
  }
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

data::CsvSchema schema_from_json(const json& j) {
  data::CsvSchema s;
  s.label_column = j.value("label_column", s.label_column);
  s.categorical = j.value("categorical", s.categorical);
  s.regression = j.value("regression", s.regression);
  s.region_column = j.value("region_column", s.region_column);
  return s;
}

json schema_to_json(const data::Dataset& d) {
  json cats = json::array();
  for (const auto& c : d.columns) {
    if (c.kind == data::ColumnKind::kCategorical) cats.push_back(c.name);
  }
  return {{"label_column", "label"}, {"categorical", cats}, {"regression", d.is_regression()}};
}

data::RegionSpec load_region(const std::string& path) {
  const json j = read_json(path);
  try {
    return data::region_from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError("region '" + path + "': " + e.what());
  }
}

data::BoxRegion load_box(const std::string& path) {
  const auto spec = load_region(path);
  if (!std::holds_alternative<data::BoxRegion>(spec)) {
    throw ConfigError("region '" + path + "' must be a box");
  }
  return std::get<data::BoxRegion>(spec);
}

std::vector<std::size_t> parse_hidden(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size() || v <= 0) throw ConfigError("--hidden: bad layer width '" + tok + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError("--hidden: need at least one layer");
  return out;
}

void split_host_port(const std::string& s, std::string& host, std::uint16_t& port) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) throw ConfigError("expected host:port, got '" + s + "'");
  host = s.substr(0, colon);
  if (host.empty()) host = "127.0.0.1";
  const std::string p = s.substr(colon + 1);
  int v = 0;
  try {
    v = std::stoi(p);
  } catch (const std::exception&) {
    v = -1;
  }
  if (v < 0 || v > 65535) throw ConfigError("bad port '" + p + "'");
  port = static_cast<std::uint16_t>(v);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IngestionError("cannot create '" + dir + "': " + ec.message());
}

void setup_logging() {
  auto logger = spdlog::get("calguard");
  if (!logger) logger = spdlog::stderr_color_st("calguard");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("ABSTAIN_AUDIT_LOG")) {
    const std::string v = env;
    if (v == "error") spdlog::set_level(spdlog::level::err);
    if (v == "debug") spdlog::set_level(spdlog::level::debug);
  }
}

int outcome_exit(zk::Outcome o) {
  switch (o) {
    case zk::Outcome::kPass: return kExitOk;
    case zk::Outcome::kFail: return kExitFail;
    case zk::Outcome::kAbort: return kExitAbort;
    case zk::Outcome::kSessionError: return kExitIo;
  }
  return kExitIo;
}

zk::Tamper parse_tamper(const std::string& s) {
  if (s == "none") return zk::Tamper::kNone;
  if (s == "confidence") return zk::Tamper::kConfidencePlusOne;
  if (s == "bin-bit") return zk::Tamper::kFlipBinBit;
  if (s == "skip-point") return zk::Tamper::kSkipPoint;
  if (s == "shift-weights") return zk::Tamper::kShiftWeights;
  throw ConfigError("unknown tamper mode '" + s + "'");
}

}  // namespace

data::Dataset load_dataset(const std::string& path, const std::string& default_file) {
  fs::path p = path;
  if (fs::is_directory(p)) p /= default_file;
  data::CsvSchema schema;
  const fs::path sp = p.parent_path() / "schema.json";
  if (fs::exists(sp)) schema = schema_from_json(read_json(sp.string()));
  return data::load_csv(p.string(), schema);
}

int dispatch(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Calibration auditing and artificial-uncertainty attacks"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Root seed for every random stream")->capture_default_str();

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  std::string gen_kind, gen_out;
  std::size_t gen_n = 0;
  double gen_test = 0.2;
  gen->add_option("kind", gen_kind, "gaussian | regression | tabular")
      ->required()
      ->check(CLI::IsMember({"gaussian", "regression", "tabular"}));
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--n", gen_n, "Rows (regression: 2000, tabular: 5000)");
  gen->add_option("--test-fraction", gen_test, "Held-out share for test.csv")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.9));

  // train
  auto* train = app.add_subcommand("train", "Train a classifier or Gaussian-head regressor");
  std::string tr_data, tr_out, tr_hidden = "32,32";
  TrainOptions tr;
  tr.opt.epochs = 150;
  tr.opt.lr = 0.02;
  train->add_option("--data", tr_data, "Training CSV or gen-data directory")->required();
  train->add_option("--out", tr_out, "Model JSON")->required();
  train->add_option("--hidden", tr_hidden, "Hidden widths, comma separated")->capture_default_str();
  train->add_option("--epochs", tr.opt.epochs)->capture_default_str();
  train->add_option("--lr", tr.opt.lr)->capture_default_str();
  train->add_option("--batch", tr.opt.batch_size)->capture_default_str();
  train->add_flag("--calibrate,!--no-calibrate", tr.calibrate,
                  "Fit a temperature on a validation carve-out (classification only)");
  train->add_option("--val-fraction", tr.val_fraction)->capture_default_str()->check(CLI::Range(0.0, 0.9));

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Fit the temperature of a model on a validation set");
  std::string cal_model, cal_data, cal_out;
  cal->add_option("--model", cal_model)->required();
  cal->add_option("--data", cal_data, "Validation CSV")->required();
  cal->add_option("--out", cal_out)->required();

  // attack
  auto* attack = app.add_subcommand("attack", "Mount an artificial-uncertainty attack");
  attack->require_subcommand(1);
  attack->fallthrough();

  auto* mir = attack->add_subcommand("mirage", "Fine-tune with the Mirage objective");
  std::string mir_model, mir_data, mir_region, mir_out, mir_config;
  double mir_eps = -1.0, mir_lambda = -1.0, mir_lr = -1.0;
  int mir_epochs = -1;
  std::size_t mir_batch = 0;
  mir->add_option("--model", mir_model)->required();
  mir->add_option("--data", mir_data)->required();
  mir->add_option("--region", mir_region, "Region JSON (box or predicate)");
  mir->add_option("--out", mir_out)->required();
  mir->add_option("--config", mir_config, "Mirage config JSON");
  mir->add_option("--epsilon", mir_eps, "Overrides the config (default 0.15)");
  mir->add_option("--lambda", mir_lambda, "Overrides the config (default 0.95)");
  mir->add_option("--epochs", mir_epochs, "Overrides the config (default 600)");
  mir->add_option("--lr", mir_lr, "Overrides the config (default 0.002)");
  mir->add_option("--batch", mir_batch, "Overrides the config (default 32)");

  auto* inj = attack->add_subcommand("inject", "Add an analytic logit shift on a box");
  std::string inj_model, inj_region, inj_shift, inj_out;
  std::size_t inj_deepen = 0;
  inj->add_option("--model", inj_model)->required();
  inj->add_option("--region", inj_region, "Box JSON")->required();
  inj->add_option("--shift", inj_shift, "Logit shift JSON {\"c\": [...]}")->required();
  inj->add_option("--out", inj_out)->required();
  inj->add_option("--deepen", inj_deepen, "Identity hidden layers added first")->capture_default_str();

  auto* rga = attack->add_subcommand("regression", "Inflate predicted variance on a region");
  std::string rg_data, rg_out, rg_model, rg_region, rg_base_out, rg_hidden = "32,32";
  mirage::RegressionAttackConfig rg;
  rg.opt.epochs = 100;
  rg.opt.lr = 0.005;
  rga->add_option("--data", rg_data)->required();
  rga->add_option("--out", rg_out)->required();
  rga->add_option("--model", rg_model, "Standard model; trained from scratch when omitted");
  rga->add_option("--base-out", rg_base_out, "Where to save the standard model when trained here");
  rga->add_option("--region", rg_region, "Region JSON (default -3 < x < -2)");
  rga->add_option("--hidden", rg_hidden)->capture_default_str();
  rga->add_option("--sigma2-target", rg.sigma2_target)->capture_default_str();
  rga->add_option("--lambda", rg.lambda)->capture_default_str();
  rga->add_option("--epochs", rg.opt.epochs)->capture_default_str();
  rga->add_option("--lr", rg.opt.lr)->capture_default_str();

  // audit
  auto* aud = app.add_subcommand("audit", "Plaintext calibration audit");
  std::string aud_model, aud_ref, aud_report, aud_csv;
  calib::AuditConfig aud_cfg;
  aud->add_option("--model", aud_model)->required();
  aud->add_option("--ref", aud_ref, "Reference CSV or gen-data directory (test.csv)")->required();
  aud->add_option("--bins", aud_cfg.bins)->capture_default_str();
  aud->add_option("--alpha", aud_cfg.alpha)->capture_default_str();
  aud->add_option("--report", aud_report, "Report JSON");
  aud->add_option("--csv", aud_csv, "Reliability CSV");

  // zk-audit
  auto* zka = app.add_subcommand("zk-audit", "Zero-knowledge calibration audit");
  std::string zk_role, zk_connect, zk_listen, zk_model, zk_ref, zk_out, zk_tamper = "none";
  std::size_t zk_tamper_point = 0;
  zk::AuditParams zk_params;
  zka->add_option("--role", zk_role)->required()->check(CLI::IsMember({"prover", "verifier", "local"}));
  zka->add_option("--connect", zk_connect, "Prover: verifier address host:port");
  zka->add_option("--listen", zk_listen, "Verifier: [host]:port to listen on");
  zka->add_option("--model", zk_model, "Prover model JSON");
  zka->add_option("--ref", zk_ref, "Reference CSV (verifier may omit it with --hidden-ref)");
  zka->add_option("--bins", zk_params.audit.bins)->capture_default_str();
  zka->add_option("--alpha", zk_params.audit.alpha)->capture_default_str();
  zka->add_option("--frac-bits", zk_params.fp.frac_bits)->capture_default_str();
  zka->add_option("--value-bits", zk_params.fp.value_bits)->capture_default_str();
  zka->add_flag("--hidden-ref", zk_params.hidden_ref, "Prover commits the reference set");
  zka->add_option("--out", zk_out, "Verdict JSON");
  zka->add_option("--tamper", zk_tamper,
                  "Prover misbehaviour for testing: none|confidence|bin-bit|skip-point|shift-weights")
      ->capture_default_str();
  zka->add_option("--tamper-point", zk_tamper_point)->capture_default_str();

  // undersample
  auto* und = app.add_subcommand("undersample", "Drop a share of the region rows from a reference set");
  std::string und_ref, und_region, und_out;
  double und_rho = 0.0;
  und->add_option("--ref", und_ref)->required();
  und->add_option("--region", und_region)->required();
  und->add_option("--rho", und_rho)->required()->check(CLI::Range(0.0, 1.0));
  und->add_option("--out", und_out, "Output CSV")->required();

  // overlap
  auto* ovl = app.add_subcommand("overlap", "Confidence histogram overlap inside vs outside a region");
  std::string ov_model, ov_data, ov_region;
  std::size_t ov_bins = 20;
  ovl->add_option("--model", ov_model)->required();
  ovl->add_option("--data", ov_data, "CSV or gen-data directory (test.csv)")->required();
  ovl->add_option("--region", ov_region)->required();
  ovl->add_option("--hist-bins", ov_bins)->capture_default_str();

  // abstain-stats
  auto* abs = app.add_subcommand("abstain-stats", "Abstention rates inside vs outside a region");
  std::string ab_model, ab_data, ab_region;
  double ab_tau = abstain::AbstainConfig{}.tau;
  abs->add_option("--model", ab_model)->required();
  abs->add_option("--data", ab_data, "CSV or gen-data directory (test.csv)")->required();
  abs->add_option("--region", ab_region)->required();
  abs->add_option("--tau", ab_tau)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      ensure_dir(gen_out);
      const fs::path dir = gen_out;
      json region;
      data::Dataset tr_set, te_set;
      if (gen_kind == "gaussian") {
        auto gm = data::gen_gaussian_mixture(seed);
        tr_set = std::move(gm.train);
        te_set = std::move(gm.test);
        region = data::region_to_json(gm.region);
      } else if (gen_kind == "regression") {
        auto d = data::gen_regression_synth(seed, gen_n ? gen_n : 2000);
        std::tie(tr_set, te_set) = data::split(d, gen_test, seed);
        region = data::region_to_json(data::regression_region());
      } else {
        auto ts = data::gen_tabular_synth(seed, gen_n ? gen_n : 5000);
        std::tie(tr_set, te_set) = data::split(ts.data, gen_test, seed);
        region = data::region_to_json(ts.region);
      }
      data::save_csv((dir / "train.csv").string(), tr_set);
      data::save_csv((dir / "test.csv").string(), te_set);
      write_json((dir / "region.json").string(), region);
      write_json((dir / "schema.json").string(), schema_to_json(tr_set));
      spdlog::info("wrote {} train and {} test rows to {}", tr_set.rows, te_set.rows, gen_out);
      return kExitOk;
    }

    if (*train) {
      tr.hidden = parse_hidden(tr_hidden);
      tr.opt.validate();
      const auto d = load_dataset(tr_data);
      if (d.is_regression()) {
        auto gh = nets::init_gaussian_head(d.dims, tr.hidden, seed);
        nets::OptConfig cfg = tr.opt;
        cfg.seed = seed;
        gh = nets::train_gaussian_nll(std::move(gh), d, cfg);
        nets::save_model(tr_out, gh.net);
      } else {
        const auto model = train_classifier(d, tr, seed);
        spdlog::info("train accuracy {:.4f}, temperature {:.4f}", nets::accuracy(model, d),
                     model.temperature);
        nets::save_model(tr_out, model);
      }
      return kExitOk;
    }

    if (*cal) {
      auto model = nets::load_model(cal_model);
      const auto val = load_dataset(cal_data);
      model.temperature = nets::fit_temperature(model, val);
      spdlog::info("temperature {:.6f}", model.temperature);
      nets::save_model(cal_out, model);
      return kExitOk;
    }

    if (*mir) {
      mirage::MirageConfig cfg;
      cfg.lambda = 0.95;
      cfg.opt.epochs = 600;
      cfg.opt.lr = 0.002;
      if (!mir_config.empty()) cfg = mirage::mirage_config_from_json(read_json(mir_config), cfg);
      if (mir_eps >= 0.0) cfg.epsilon = mir_eps;
      if (mir_lambda >= 0.0) cfg.lambda = mir_lambda;
      if (mir_epochs >= 0) cfg.opt.epochs = mir_epochs;
      if (mir_lr > 0.0) cfg.opt.lr = mir_lr;
      if (mir_batch > 0) cfg.opt.batch_size = mir_batch;
      cfg.opt.seed = seed;
      const auto model = nets::load_model(mir_model);
      const auto d = load_dataset(mir_data);
      data::RegionSpec region = data::PredicateRegion{};
      if (!mir_region.empty()) {
        region = load_region(mir_region);
      } else if (!d.region) {
        throw ConfigError("attack mirage: --region is required unless the CSV has a region column");
      }
      const auto res = mirage::finetune_mirage(model, d, region, cfg);
      for (const auto& w : res.warnings) spdlog::warn("{}", w);
      spdlog::info("fine-tuned on {} rows, {} inside the region", d.rows, res.region_rows);
      nets::save_model(mir_out, res.model);
      return kExitOk;
    }

    if (*inj) {
      auto model = nets::load_model(inj_model);
      const auto box = load_box(inj_region);
      const auto shift = widgets::logit_shift_from_json(read_json(inj_shift));
      if (inj_deepen > 0) model = widgets::deepen(model, inj_deepen);
      const auto wp = widgets::derive_widget_params(box);
      nets::save_model(inj_out, widgets::inject_region_shift(model, box, shift, wp));
      return kExitOk;
    }

    if (*rga) {
      const auto d = load_dataset(rg_data);
      if (!d.is_regression()) throw InvalidInput("attack regression: dataset has class labels");
      rg.region = rg_region.empty() ? data::RegionSpec{data::regression_region()} : load_region(rg_region);
      rg.opt.seed = seed;
      rg.validate();
      nets::GaussianHeadModel base;
      if (!rg_model.empty()) {
        base.net = nets::load_model(rg_model);
      } else {
        base = nets::init_gaussian_head(d.dims, parse_hidden(rg_hidden), seed);
        nets::OptConfig cfg;
        cfg.epochs = 200;
        cfg.lr = 0.005;
        cfg.seed = seed;
        base = nets::train_gaussian_nll(std::move(base), d, cfg);
        if (!rg_base_out.empty()) nets::save_model(rg_base_out, base.net);
      }
      const auto attacked = mirage::finetune_regression_attack(base, d, rg);
      nets::save_model(rg_out, attacked.net);
      return kExitOk;
    }

    if (*aud) {
      aud_cfg.validate();
      const auto model = nets::load_model(aud_model);
      const auto ref = load_dataset(aud_ref, "test.csv");
      const auto report = calib::reliability(model, ref, aud_cfg.bins);
      const auto verdict = calib::audit_verdict(report, aud_cfg.alpha);
      const json j = calib::report_to_json(report, &verdict);
      if (!aud_report.empty()) write_json(aud_report, j);
      if (!aud_csv.empty()) calib::write_reliability_csv(aud_csv, report);
      std::cout << json{{"pass", verdict.pass},
                        {"ece", report.ece},
                        {"max_cale", report.max_cale},
                        {"offending_bins", verdict.offending}}
                       .dump()
                << '\n';
      return verdict.pass ? kExitOk : kExitFail;
    }

    if (*zka) {
      zk_params.validate();
      zk::ProverOptions popt;
      popt.tamper = parse_tamper(zk_tamper);
      popt.tamper_point = zk_tamper_point;
      zk::VerifierOptions vopt;
      vopt.record_transcript = false;
      zk::AuditOutcome out;

      if (zk_role == "verifier") {
        if (zk_listen.empty()) throw ConfigError("zk-audit verifier: --listen is required");
        if (zk_ref.empty() && !zk_params.hidden_ref) {
          throw ConfigError("zk-audit verifier: --ref is required without --hidden-ref");
        }
        std::optional<data::Dataset> ref;
        if (!zk_ref.empty() && !zk_params.hidden_ref) ref = load_dataset(zk_ref, "test.csv");
        std::string host;
        std::uint16_t port = 0;
        split_host_port(zk_listen, host, port);
        itmac::TcpListener listener(port);
        spdlog::info("listening on port {}", listener.port());
        auto ch = listener.accept_one();
        out = zk::run_verifier(*ch, ref ? &*ref : nullptr, zk_params, vopt);
      } else {
        if (zk_model.empty() || zk_ref.empty()) {
          throw ConfigError("zk-audit " + zk_role + ": --model and --ref are required");
        }
        const auto qm = zk::quantize_model(nets::load_model(zk_model), zk_params.fp);
        const auto ref = load_dataset(zk_ref, "test.csv");
        if (zk_role == "prover") {
          if (zk_connect.empty()) throw ConfigError("zk-audit prover: --connect is required");
          std::string host;
          std::uint16_t port = 0;
          split_host_port(zk_connect, host, port);
          auto ch = itmac::tcp_connect(host, port);
          out = zk::run_prover(*ch, qm, ref, zk_params, popt);
        } else {
          out = zk::run_local(qm, ref, zk_params, popt, vopt).verifier;
        }
      }
      spdlog::info("{}: {} points, {:.4f} s/point, {:.0f} bytes/point", zk::to_string(out.outcome),
                   out.points, out.seconds_per_point(), out.bytes_per_point());
      if (!out.message.empty()) spdlog::info("{}", out.message);
      const json j = out.to_json();
      if (!zk_out.empty()) write_json(zk_out, j);
      std::cout << j.dump() << '\n';
      return outcome_exit(out.outcome);
    }

    if (*und) {
      const auto ref = load_dataset(und_ref, "test.csv");
      const auto region = load_region(und_region);
      const auto kept = calib::undersample_region(ref, region, und_rho, seed);
      data::save_csv(und_out, kept);
      spdlog::info("kept {} of {} rows", kept.rows, ref.rows);
      return kExitOk;
    }

    if (*ovl) {
      const auto model = nets::load_model(ov_model);
      const auto d = load_dataset(ov_data, "test.csv");
      const double o = calib::confidence_overlap(model, d, load_region(ov_region), ov_bins);
      std::cout << json{{"overlap", o}, {"hist_bins", ov_bins}}.dump() << '\n';
      return kExitOk;
    }

    if (*abs) {
      const auto model = nets::load_model(ab_model);
      const auto d = load_dataset(ab_data, "test.csv");
      const auto s = abstain::abstention_stats(model, d, load_region(ab_region), ab_tau);
      auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
      std::cout << json{{"tau", ab_tau},
                        {"rate_inside", num(s.rate_inside)},
                        {"rate_outside", num(s.rate_outside)},
                        {"n_inside", s.n_inside},
                        {"n_outside", s.n_outside}}
                       .dump()
                << '\n';
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const InvalidInput& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const IngestionError& e) {
    spdlog::error("{}", e.what());
    return kExitIo;
  } catch (const itmac::SessionError& e) {
    spdlog::error("{}", e.what());
    return kExitIo;
  } catch (const itmac::ProtocolAbort& e) {
    spdlog::error("{}", e.what());
    return kExitAbort;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace calguard::cli
