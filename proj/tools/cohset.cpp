#include <cohset/experiments.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace {

struct Options {
  std::string config;
  std::string out;
  unsigned threads = 0;
};

int fail(const std::filesystem::path& out, const std::string& kind, const std::string& msg, const std::string& path,
         int code) {
  nlohmann::json e{{"error", msg}, {"kind", kind}, {"exit_code", code}};
  if (!path.empty()) e["path"] = path;
  std::cerr << e.dump() << '\n';
  if (!out.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    std::ofstream f(out / "error.json");
    if (f) f << e.dump(2) << '\n';
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coherent sets from Fokker-Planck transfer operators"};
  app.require_subcommand(1);
  Options opt;
  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "experiment config (JSON)")->required();
    sub->add_option("--out", opt.out, "output directory (default: the config's output.directory)");
    sub->add_option("--threads", opt.threads, "worker threads, 0 = all cores")->default_val(0);
    return sub;
  };
  auto* fp = add("run-fp", "assemble the Fokker-Planck transfer matrix and its leading singular vectors");
  auto* ulam = add("run-ulam", "Ulam transition matrix and its leading singular vectors");
  auto* ns = add("run-ns", "integrate the vorticity equation and write a gridded flow");
  auto* ex = add("extract", "coherent pair or clusters from saved singular vectors");
  auto* sde = add("validate-sde", "Monte-Carlo survival fraction of the extracted pair");
  CLI11_PARSE(app, argc, argv);

  std::filesystem::path out = opt.out;
  try {
    const auto cfg = cohset::load_config(opt.config);
    if (out.empty()) {
      if (!cfg.output_dir) throw cohset::ConfigError("no output directory: pass --out or set output.directory");
      out = *cfg.output_dir;
    }
    nlohmann::json m;
    if (fp->parsed()) m = cohset::run_fp(cfg, out, opt.threads);
    else if (ulam->parsed()) m = cohset::run_ulam(cfg, out, opt.threads);
    else if (ns->parsed()) m = cohset::run_ns(cfg, out);
    else if (ex->parsed()) m = cohset::extract(cfg, out);
    else if (sde->parsed()) m = cohset::validate_sde(cfg, out, opt.threads);
    std::filesystem::remove(out / "error.json");
    if (m.contains("warnings"))
      for (const auto& w : m["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
    if (m.contains("sigma")) std::cout << "sigma: " << m["sigma"].dump() << '\n';
    if (m.contains("rho")) std::cout << "rho: " << m["rho"].dump() << '\n';
    if (m.contains("kappa")) std::cout << "kappa: " << m["kappa"].dump() << " +- " << m["std_error"].dump() << '\n';
    std::cout << "wrote " << out.string() << '\n';
    return 0;
  } catch (const cohset::ConfigError& e) {
    return fail(out, "config", e.what(), e.path(), 2);
  } catch (const cohset::NumericalError& e) {
    return fail(out, "numerical", e.what(), "", 3);
  } catch (const cohset::DegenerateError& e) {
    return fail(out, "degenerate", e.what(), "", 4);
  } catch (const std::exception& e) {
    return fail(out, "runtime", e.what(), "", 1);
  }
}
