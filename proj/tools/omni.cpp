// omni: rate allocation and code construction for communication for
// omniscience. See README.md for the document formats.

#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "omni/commands.hpp"

namespace {

using omni::commands::ExitCode;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw omni::Error(omni::Errc::invalid_input, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<omni::Rational> parse_alpha(const std::string& text) {
  std::vector<omni::Rational> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(omni::parse_rational(tok));
  return out;
}

struct Flags {
  std::string problem;
  std::string scheme;
  std::string scheme_out;
  std::string alpha;
  std::optional<std::uint64_t> n;
  std::optional<std::uint64_t> seed;
  int max_tries = 64;
  std::optional<double> tolerance;
  std::string format = "json";
};

void emit(const omni::commands::ordered_json& report, const std::string& format) {
  if (format == "table") std::cout << omni::commands::render_table(report);
  else std::cout << report.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-cost communication for omniscience: rates, codes and verification"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("problem", f.problem, "problem document (JSON)")->required();
    sub->add_option("--format", f.format, "output format")->check(CLI::IsMember({"json", "table"}));
  };
  auto add_alpha = [&](CLI::App* sub) {
    sub->add_option("--alpha", f.alpha, "comma-separated weights, e.g. 1,1/2,3");
  };

  auto* rates = app.add_subcommand("rates", "minimum-cost rate allocation");
  add_common(rates);
  add_alpha(rates);
  rates->add_option("--tolerance", f.tolerance, "bracket tolerance for pmf sources")->check(CLI::PositiveNumber);

  auto* ilp = app.add_subcommand("ilp", "rates restricted to multiples of 1/n");
  add_common(ilp);
  add_alpha(ilp);
  ilp->add_option("--n", f.n, "block length");

  auto* code = app.add_subcommand("code", "construct a linear transmission scheme");
  add_common(code);
  add_alpha(code);
  code->add_option("--n", f.n, "block length");
  code->add_option("--seed", f.seed, "random seed");
  code->add_option("--max-tries", f.max_tries, "random draws before the fallback")->check(CLI::PositiveNumber);
  code->add_option("--scheme-out", f.scheme_out, "write the scheme document here");

  auto* verify = app.add_subcommand("verify", "check a scheme achieves omniscience");
  add_common(verify);
  verify->add_option("scheme", f.scheme, "scheme document (JSON)")->required();

  auto* selfcheck = app.add_subcommand("selfcheck", "run the property suite on a document");
  add_common(selfcheck);
  selfcheck->add_option("--seed", f.seed, "seed for sampled checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : ExitCode::invalid_input;
  }

  try {
    omni::commands::Options opt;
    if (!f.alpha.empty()) opt.alpha = parse_alpha(f.alpha);
    opt.n = f.n;
    opt.seed = f.seed;
    opt.max_tries = f.max_tries;
    opt.tolerance = f.tolerance;

    const std::string text = slurp(f.problem);
    const auto problem = omni::document::parse_problem(text, f.problem);
    omni::commands::Outcome out;
    if (rates->parsed()) out = omni::commands::cmd_rates(problem, opt);
    else if (ilp->parsed()) out = omni::commands::cmd_ilp(problem, opt);
    else if (code->parsed()) out = omni::commands::cmd_code(problem, opt);
    else if (verify->parsed()) out = omni::commands::cmd_verify(problem, slurp(f.scheme), f.scheme, opt);
    else out = omni::commands::cmd_selfcheck(problem, opt);

    if (out.scheme && !f.scheme_out.empty()) {
      std::ofstream os(f.scheme_out, std::ios::binary);
      if (!os) throw omni::Error(omni::Errc::invalid_input, "cannot write " + f.scheme_out);
      os << out.scheme->dump(2) << '\n';
    }
    emit(out.report, f.format);
    return out.exit_code;
  } catch (const omni::Error& e) {
    std::cerr << "omni: " << e.what() << '\n';
    return omni::commands::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "omni: " << e.what() << '\n';
    return ExitCode::invalid_input;
  }
}
