// nbpuf: fit / thresholds / enroll / reconstruct / evaluate / simulate / report

#include <CLI11.hpp>

#include <map>

#include "nbpuf/cli.hpp"

int main(int argc, char** argv) {
  using namespace nbpuf;
  CLI::App app{"Non-binary PUF response extraction toolkit"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string fit = "mle";
  std::string rescale = "smallest";
  std::string traces_path, profile_path, model_path, out_path;
  std::vector<std::string> report_traces;
  std::uint64_t k = 0;
  double alpha = 0.0, beta = 0.0;

  const std::map<std::string, FitMethod> fit_map{{"moments", FitMethod::Moments}, {"mle", FitMethod::MaxLikelihood}};
  const std::map<std::string, RescalePolicy> rescale_map{{"smallest", RescalePolicy::SmallestRepresentable},
                                                         {"observed", RescalePolicy::ObservedMinMax}};

  auto add_fit = [&](CLI::App* c) {
    c->add_option("--fit", fit, "beta fit method")->check(CLI::IsMember({"moments", "mle"}));
    c->add_option("--rescale", rescale, "re-scaling policy")->check(CLI::IsMember({"smallest", "observed"}));
  };
  auto add_bits = [&](CLI::App* c) {
    c->add_option("--bits", cfg.t_bits, "bits per symbol t (alphabet 2^t)")->check(CLI::Range(1, 8));
  };

  auto* fit_cmd = app.add_subcommand("fit", "fit the beta model to the variable cells of a trace file");
  fit_cmd->add_option("--traces", traces_path, "trace CSV")->required();
  fit_cmd->add_option("--out", out_path, "model JSON");
  add_fit(fit_cmd);

  auto* thr_cmd = app.add_subcommand("thresholds", "compute equal-area thresholds");
  thr_cmd->add_option("--model", model_path, "model JSON from 'fit'");
  thr_cmd->add_option("--alpha", alpha);
  thr_cmd->add_option("--beta", beta);
  thr_cmd->add_option("--k", k, "evaluations per cell");
  thr_cmd->add_option("--traces", traces_path, "trace CSV (for bounds)");
  thr_cmd->add_option("--out", out_path);
  thr_cmd->add_option("--rescale", rescale)->check(CLI::IsMember({"smallest", "observed"}));
  add_bits(thr_cmd);

  auto* enroll_cmd = app.add_subcommand("enroll", "build an extraction profile");
  enroll_cmd->add_option("--traces", traces_path)->required();
  enroll_cmd->add_option("--out", out_path, "profile JSON");
  add_bits(enroll_cmd);
  add_fit(enroll_cmd);

  auto* rec_cmd = app.add_subcommand("reconstruct", "re-extract responses and key bits against a profile");
  rec_cmd->add_option("--traces", traces_path)->required();
  rec_cmd->add_option("--profile", profile_path)->required();
  rec_cmd->add_option("--out", out_path, "responses JSON (key bits go next to it as .key)");

  auto* eval_cmd = app.add_subcommand("evaluate", "error rates and bias of a reconstruction");
  eval_cmd->add_option("--traces", traces_path)->required();
  eval_cmd->add_option("--profile", profile_path)->required();
  eval_cmd->add_option("--out", out_path, "metrics JSON");

  auto* sim_cmd = app.add_subcommand("simulate", "synthetic population and repeat-measurement experiment");
  sim_cmd->add_option("--alpha", alpha)->required();
  sim_cmd->add_option("--beta", beta)->required();
  sim_cmd->add_option("--cells", cfg.cells)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--k", k, "evaluations per measurement (default 1048575)");
  sim_cmd->add_option("--seed", cfg.seed);
  sim_cmd->add_option("--repeats", cfg.repeats)->check(CLI::Range(2, 1000000));
  sim_cmd->add_option("--out", out_path, "output directory")->required();
  add_bits(sim_cmd);
  add_fit(sim_cmd);

  auto* rep_cmd = app.add_subcommand("report", "alphabet comparison table (first trace set enrolls)");
  rep_cmd->add_option("--traces", report_traces)->required();
  rep_cmd->add_option("--out", out_path, "report JSON");
  add_fit(rep_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  }

  if (*fit_cmd) cfg.command = Command::Fit;
  if (*thr_cmd) cfg.command = Command::Thresholds;
  if (*enroll_cmd) cfg.command = Command::Enroll;
  if (*rec_cmd) cfg.command = Command::Reconstruct;
  if (*eval_cmd) cfg.command = Command::Evaluate;
  if (*sim_cmd) cfg.command = Command::Simulate;
  if (*rep_cmd) cfg.command = Command::Report;

  cfg.fit_method = fit_map.at(fit);
  cfg.rescale = rescale_map.at(rescale);
  if (!traces_path.empty()) cfg.traces.emplace_back(traces_path);
  for (const auto& t : report_traces) cfg.traces.emplace_back(t);
  if (!profile_path.empty()) cfg.profile = profile_path;
  if (!model_path.empty()) cfg.model = model_path;
  if (!out_path.empty()) cfg.out = out_path;
  for (CLI::App* c : {thr_cmd, sim_cmd}) {
    if (c->count("--alpha")) cfg.alpha = alpha;
    if (c->count("--beta")) cfg.beta = beta;
    if (c->count("--k")) cfg.k = k;
  }
  return dispatch(cfg);
}
