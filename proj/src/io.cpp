#include "beq/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace beq {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_real(const std::string& s, const std::filesystem::path& path, int line) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::Io, path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
  return x;
}

}  // namespace

std::string format_real(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  (void)ec;
  return std::string(buf, ptr);
}

void write_solution_csv(const std::filesystem::path& path, const EquilibriumSolution& sol) {
  std::ofstream out = open_out(path);
  const int d = sol.d();
  out << "t,A,B,regime";
  for (int j = 1; j <= d; ++j) out << ",u_" << j;
  for (int j = 1; j <= d; ++j) out << ",a_" << j;
  out << ",fp_residual\n";
  for (std::size_t k = 0; k < sol.t_grid.size(); ++k) {
    out << format_real(sol.t_grid[k]) << ',' << format_real(sol.A_vals[k]) << ',' << format_real(sol.B_vals[k]) << ','
        << to_string(sol.regime[k]);
    for (int j = 0; j < d; ++j) out << ',' << format_real(sol.u_vals[k](j));
    for (int j = 0; j < d; ++j) out << ',' << format_real(sol.a_vals[k](j));
    out << ',' << format_real(sol.fp_residual[k]) << '\n';
  }
  finish(out, path);
}

EquilibriumSolution read_solution_csv(const std::filesystem::path& path, const MarketModel& model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open solution file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, path.string() + ": empty file");
  const std::vector<std::string> header = split(line);
  const int d = model.d();
  if (static_cast<int>(header.size()) != 5 + 2 * d || header[0] != "t" || header[1] != "A" || header[2] != "B" ||
      header[3] != "regime" || header.back() != "fp_residual") {
    throw Error(ErrorKind::Io, path.string() + ": header does not match a d=" + std::to_string(d) + " solution");
  }
  EquilibriumSolution sol;
  bool borrowing = false;
  bool constrained = false;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::Io, path.string() + ":" + std::to_string(lineno) + ": wrong number of columns");
    }
    sol.t_grid.push_back(parse_real(cells[0], path, lineno));
    sol.A_vals.push_back(parse_real(cells[1], path, lineno));
    sol.B_vals.push_back(parse_real(cells[2], path, lineno));
    const Regime r = regime_from_string(cells[3]);
    sol.regime.push_back(r);
    (r == Regime::Borrow || r == Regime::Boundary || r == Regime::Save ? borrowing : constrained) = true;
    Vec u(d), a(d);
    for (int j = 0; j < d; ++j) u(j) = parse_real(cells[4 + j], path, lineno);
    for (int j = 0; j < d; ++j) a(j) = parse_real(cells[4 + d + j], path, lineno);
    sol.u_vals.push_back(std::move(u));
    sol.a_vals.push_back(std::move(a));
    sol.fp_residual.push_back(parse_real(cells.back(), path, lineno));
  }
  if (sol.t_grid.size() < 2) throw Error(ErrorKind::Io, path.string() + ": needs at least two rows");
  if (borrowing && constrained) throw Error(ErrorKind::Io, path.string() + ": mixes regime labels of both problems");
  sol.problem = borrowing ? Problem::Borrowing : Problem::Constrained;
  for (std::size_t k = 0; k < sol.t_grid.size(); ++k) {
    sol.drift_vals.push_back(wealth_drift(model, sol.problem, sol.t_grid[k], sol.u_vals[k]));
  }
  sol.diagnostics.steps = static_cast<int>(sol.t_grid.size()) - 1;
  return sol;
}

void write_hjb_csv(const std::filesystem::path& path, const HJBReport& report) {
  std::ofstream out = open_out(path);
  const int d = report.points.empty() ? 0 : static_cast<int>(report.points.front().argmax_u.size());
  out << "t,x,residual_at_candidate,max_residual";
  for (int j = 1; j <= d; ++j) out << ",argmax_u_" << j;
  out << ",verdict\n";
  for (const HjbPoint& p : report.points) {
    out << format_real(p.t) << ',' << format_real(p.x) << ',' << format_real(p.residual_at_candidate) << ','
        << format_real(p.max_residual);
    for (int j = 0; j < d; ++j) out << ',' << format_real(p.argmax_u(j));
    out << ',' << to_string(p.verdict) << '\n';
  }
  finish(out, path);
}

void write_perturbation_csv(const std::filesystem::path& path, const PerturbationReport& report) {
  std::ofstream out = open_out(path);
  out << "a_index,eps,slope,ci,predicted_slope,verdict\n";
  for (const PerturbationEntry& e : report.entries) {
    out << e.a_index << ',' << format_real(e.eps) << ',' << format_real(e.slope) << ',' << format_real(e.ci) << ','
        << format_real(e.predicted_slope) << ',' << to_string(e.verdict) << '\n';
  }
  finish(out, path);
}

void write_wellposedness_csv(const std::filesystem::path& path, const WellposednessReport& report) {
  std::ofstream out = open_out(path);
  out << "condition,value\n";
  for (const auto& [name, value] : report.condition_values) out << name << ',' << format_real(value) << '\n';
  out << "verdict," << (report.verdict == Verdict::Proven ? "Proven" : "NotProven") << '\n';
  finish(out, path);
}

void write_plot_script(const std::filesystem::path& path, const std::string& solution_csv_name) {
  std::ofstream out = open_out(path);
  out << R"PY(#!/usr/bin/env python3
"""Plots A(t), the portfolio weights and the regime bands of a solution CSV."""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
src = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, ")PY"
      << solution_csv_name << R"PY(")
with open(src, newline="") as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["t"]) for r in rows]
A = [float(r["A"]) for r in rows]
u_cols = sorted((k for k in rows[0] if k.startswith("u_")), key=lambda k: int(k[2:]))
regimes = [r["regime"] for r in rows]

fig, (ax_a, ax_u) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
ax_a.plot(t, A)
ax_a.set_ylabel("A(t)")
for k in u_cols:
    ax_u.plot(t, [float(r[k]) for r in rows], label=k)
ax_u.set_ylabel("u(t)")
ax_u.set_xlabel("t")
ax_u.legend()

colors = {"Borrow": "tab:red", "Boundary": "tab:orange", "Save": "tab:green", "Constrained": "tab:purple"}
start = 0
for i in range(1, len(t) + 1):
    if i == len(t) or regimes[i] != regimes[start]:
        c = colors.get(regimes[start])
        if c is not None:
            for ax in (ax_a, ax_u):
                ax.axvspan(t[start], t[i - 1], color=c, alpha=0.15, lw=0)
        start = i

fig.tight_layout()
out = os.path.splitext(src)[0] + ".png"
fig.savefig(out, dpi=120)
print(out)
)PY";
  finish(out, path);
}

}  // namespace beq
