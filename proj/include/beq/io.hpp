#pragma once

#include <filesystem>
#include <string>

#include "beq/equilibrium.hpp"
#include "beq/verify.hpp"

namespace beq {

/// Shortest-safe, locale-free rendering with 17 significant digits.
std::string format_real(double x);

/// Columns: t, A, B, regime, u_1..u_d, a_1..a_d, fp_residual.
void write_solution_csv(const std::filesystem::path& path, const EquilibriumSolution& sol);

/// Reads a solution CSV back. The problem is recovered from the regime
/// labels, and drift values are recomputed from the market model.
EquilibriumSolution read_solution_csv(const std::filesystem::path& path, const MarketModel& model);

/// Columns: t, x, residual_at_candidate, max_residual, argmax_u_1..d, verdict.
void write_hjb_csv(const std::filesystem::path& path, const HJBReport& report);

/// Columns: a_index, eps, slope, ci, predicted_slope, verdict.
void write_perturbation_csv(const std::filesystem::path& path, const PerturbationReport& report);

/// Columns: condition, value; the last row holds the verdict.
void write_wellposedness_csv(const std::filesystem::path& path, const WellposednessReport& report);

/// Standalone matplotlib script that plots A(t), the components of u and
/// the regime bands from a solution CSV in the same directory.
void write_plot_script(const std::filesystem::path& path, const std::string& solution_csv_name);

}  // namespace beq
