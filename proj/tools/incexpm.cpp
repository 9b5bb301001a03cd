#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "incexpm/incexpm.hpp"

namespace fs = std::filesystem;
using namespace incexpm;

namespace {

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct ExpmArgs {
  std::string in, out;
  int degree = kDefaultPadeDegree;
  double theta = kTheta13;
};

int run_expm(const ExpmArgs& a) {
  const DenseMatrix g = read_matrix_file(a.in);
  write_matrix_file(a.out, expm_baseline(g, a.degree, a.theta));
  return 0;
}

struct IncrementalArgs {
  std::string columns;
  std::string scaling = "adaptive";
  std::string emit;
  int degree = kDefaultPadeDegree;
  bool check = false;
};

int run_incremental(const IncrementalArgs& a) {
  const ColumnStream stream = read_block_columns_file(a.columns);
  const ScalingStrategy strategy = ScalingStrategy::parse(a.scaling);
  fs::create_directories(a.emit);
  std::ofstream csv(fs::path(a.emit) / "steps.csv");
  if (!csv) throw ParseError("cannot write steps.csv in '" + a.emit + "'");
  csv << "step,dim,s,restart,seconds" << (a.check ? ",relerr" : "") << '\n';

  BlockTriangularMatrix g(stream.initial);
  std::size_t next = 0;
  auto source = [&]() -> std::optional<BlockColumn> {
    if (next == stream.columns.size()) return std::nullopt;
    const BlockColumn& c = stream.columns[next++];
    if (a.check) g.append(c.top.view(), c.diagonal.view());
    return c;
  };
  auto visit = [&](const BlockTriangularMatrix& f, const StepReport& r) {
    write_matrix_file((fs::path(a.emit) / ("F_" + std::to_string(r.step) + ".txt")).string(), f.data());
    csv << r.step << ',' << r.dimension << ',' << r.s << ',' << (r.restart ? 1 : 0) << ','
        << fmt("%.6g", r.seconds);
    if (a.check) {
      const double err = rel_error_frobenius(expm_baseline(g.data(), a.degree, strategy.theta), f.data());
      csv << ',' << fmt("%.6e", err);
    }
    csv << '\n';
    return false;
  };
  run_sequence(stream.initial, source, strategy, pade_coefficients(a.degree), visit);
  return 0;
}

struct GeneratorArgs {
  std::string model = "jacobi";
  std::string params;
  std::size_t degree = 2;
  std::string out;
  std::string partition_out;
};

PolynomialOperatorSpec model_spec(const std::string& model, const std::map<std::string, double>& p) {
  if (model == "jacobi") return jacobi_spec(jacobi_params_from(p));
  if (model == "heston") return heston_spec(heston_params_from(p));
  throw InvalidArgument("unknown model '" + model + "' (jacobi or heston)");
}

int run_generator(const GeneratorArgs& a) {
  const BlockTriangularMatrix g = build_generator_matrix(model_spec(a.model, parse_params(a.params)), a.degree);
  write_matrix_file(a.out, g.data());
  if (!a.partition_out.empty()) {
    std::ofstream out(a.partition_out);
    if (!out) throw ParseError("cannot open '" + a.partition_out + "' for writing");
    write_partition(out, g.partition());
  }
  return 0;
}

struct PriceArgs {
  std::string model = "jacobi";
  std::string params;
  double y0 = 0.0, v0 = 0.04, tau = std::nan(""), logstrike = 0.0, muw = 0.0, sigmaw = 0.5;
  double eps = 1e-3;
  std::size_t nmax = 100;
  std::size_t window = 3;
  std::string scaling = "adaptive";
  std::string ledger;
};

int run_price(const PriceArgs& a) {
  if (a.model != "jacobi") throw InvalidArgument("price: only the jacobi model is supported");
  const auto params = parse_params(a.params);
  PricingConfig cfg;
  cfg.jacobi = jacobi_params_from(params);
  cfg.y0 = a.y0;
  cfg.v0 = a.v0;
  cfg.tau = std::isnan(a.tau) ? detail::require_param(params, "tau") : a.tau;
  cfg.log_strike = a.logstrike;
  cfg.mu_w = a.muw;
  cfg.sigma_w = a.sigmaw;
  cfg.eps = a.eps;
  cfg.n_max = a.nmax;
  cfg.stop_window = a.window;
  cfg.scaling = ScalingStrategy::parse(a.scaling);
  const PriceResult res = price_call(cfg);
  if (!a.ledger.empty()) {
    std::ofstream out(a.ledger);
    if (!out) throw ParseError("cannot open '" + a.ledger + "' for writing");
    out << "n,l_n,f_n,term,partial_price,cum_seconds\n";
    for (const auto& e : res.ledger) {
      out << e.n << ',' << fmt("%.17g", e.l) << ',' << fmt("%.17g", e.f) << ',' << fmt("%.17g", e.term)
          << ',' << fmt("%.17g", e.partial_price) << ',' << fmt("%.6g", e.cum_seconds) << '\n';
    }
  }
  std::cout << "price " << fmt("%.12g", res.price) << " degree " << res.n
            << (res.converged ? "" : " (not converged)") << '\n';
  return res.converged ? 0 : 3;
}

struct BenchArgs {
  std::uint64_t seed = 1;
  std::size_t blocks = 46, bmin = 20, bmax = 80;
  std::string spectrum = "-80:-0.5";
  double cond = 100.0;
  std::string methods = "naive,fixed:6,fixed:12,adaptive";
  bool check = false;
  int repeats = 3;
  std::string out;
};

int run_bench(const BenchArgs& a) {
  RandomInstanceSpec spec;
  spec.seed = a.seed;
  spec.block_sizes = random_block_sizes(a.seed, a.blocks, a.bmin, a.bmax);
  const auto colon = a.spectrum.find(':', 1);
  if (colon == std::string::npos) throw ParseError("spectrum must be lo:hi");
  spec.lambda_lo = std::stod(a.spectrum.substr(0, colon));
  spec.lambda_hi = std::stod(a.spectrum.substr(colon + 1));
  spec.condition_target = a.cond;
  const BlockTriangularMatrix instance = generate_instance(spec);

  std::vector<BenchMethod> methods;
  for (const auto& m : split(a.methods, ',')) methods.push_back(BenchMethod::parse(m));
  BenchOptions opt;
  opt.check = a.check;
  opt.repeats = a.repeats;
  const auto records = run_benchmark(instance, methods, opt);
  if (a.out.empty() || a.out == "-") {
    write_bench_csv(std::cout, records);
  } else {
    std::ofstream out(a.out);
    if (!out) throw ParseError("cannot open '" + a.out + "' for writing");
    write_bench_csv(out, records);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental exponentials of nested block triangular matrices"};
  app.require_subcommand(1);

  ExpmArgs ea;
  auto* expm = app.add_subcommand("expm", "Exponential of a matrix file by scaling and squaring");
  expm->add_option("--in", ea.in, "input matrix")->required();
  expm->add_option("--out", ea.out, "output matrix")->required();
  expm->add_option("--degree", ea.degree, "Pade degree")->capture_default_str();
  expm->add_option("--theta", ea.theta, "norm threshold")->capture_default_str();

  IncrementalArgs ia;
  auto* inc = app.add_subcommand("incremental", "Exponentials of a stream of appended block columns");
  inc->add_option("--columns", ia.columns, "block column stream file")->required();
  inc->add_option("--scaling", ia.scaling, "fixed:<s> | adaptive[:<theta>]")->capture_default_str();
  inc->add_option("--emit", ia.emit, "output directory")->required();
  inc->add_option("--degree", ia.degree, "Pade degree")->capture_default_str();
  inc->add_flag("--check", ia.check, "compare every stage with the baseline exponential");

  GeneratorArgs ga;
  auto* gen = app.add_subcommand("generator", "Generator matrix of a polynomial diffusion");
  gen->add_option("--model", ga.model, "jacobi | heston")->capture_default_str();
  gen->add_option("--params", ga.params, "kappa=..,theta=..,sigma=..,r=..,rho=..,vmin=..,vmax=..")->required();
  gen->add_option("--degree", ga.degree, "polynomial degree n")->required();
  gen->add_option("--out", ga.out, "output matrix")->required();
  gen->add_option("--partition-out", ga.partition_out, "write block sizes here");

  PriceArgs pa;
  auto* price = app.add_subcommand("price", "Hermite series price of a European call (Jacobi model)");
  price->add_option("--model", pa.model, "jacobi")->capture_default_str();
  price->add_option("--params", pa.params, "model parameters, key=value list")->required();
  price->add_option("--y0", pa.y0, "initial log-price")->capture_default_str();
  price->add_option("--v0", pa.v0, "initial variance")->capture_default_str();
  price->add_option("--tau", pa.tau, "maturity (defaults to params tau)");
  price->add_option("--logstrike", pa.logstrike, "log strike")->capture_default_str();
  price->add_option("--muw", pa.muw, "weight mean")->capture_default_str();
  price->add_option("--sigmaw", pa.sigmaw, "weight standard deviation")->capture_default_str();
  price->add_option("--eps", pa.eps, "truncation tolerance")->capture_default_str();
  price->add_option("--nmax", pa.nmax, "largest degree")->capture_default_str();
  price->add_option("--window", pa.window, "consecutive small terms needed to stop")->capture_default_str();
  price->add_option("--scaling", pa.scaling, "fixed:<s> | adaptive[:<theta>]")->capture_default_str();
  price->add_option("--ledger", pa.ledger, "per-degree CSV output");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Timing and accuracy of naive vs incremental exponentials");
  bench->add_option("--seed", ba.seed, "random seed")->capture_default_str();
  bench->add_option("--blocks", ba.blocks, "number of blocks")->capture_default_str();
  bench->add_option("--bmin", ba.bmin, "smallest block")->capture_default_str();
  bench->add_option("--bmax", ba.bmax, "largest block")->capture_default_str();
  bench->add_option("--spectrum", ba.spectrum, "eigenvalue interval lo:hi")->capture_default_str();
  bench->add_option("--cond", ba.cond, "eigenbasis condition target")->capture_default_str();
  bench->add_option("--methods", ba.methods, "comma separated: naive, fixed:<s>, adaptive")->capture_default_str();
  bench->add_flag("--check", ba.check, "record relative errors against the baseline");
  bench->add_option("--repeats", ba.repeats, "timing repeats (median)")->capture_default_str();
  bench->add_option("--out", ba.out, "CSV output (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*expm) return run_expm(ea);
    if (*inc) return run_incremental(ia);
    if (*gen) return run_generator(ga);
    if (*price) return run_price(pa);
    if (*bench) return run_bench(ba);
  } catch (const std::exception& e) {
    std::cerr << "incexpm: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
