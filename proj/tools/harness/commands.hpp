#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "harness/experiment.hpp"
#include "iomc/diagnostics.hpp"
#include "iomc/evaluation.hpp"

namespace iomc::harness {

/// Inclusive case-id range parsed from "a..b" (or a single id "a").
struct CaseRange {
    std::size_t first = 0;
    std::size_t last = 0;
};
CaseRange parse_case_range(const std::string& text);

struct RunOptions {
    std::optional<CaseRange> cases;
    /// Overrides the chain count for every selected case.
    std::optional<std::size_t> chains;
    bool force = false;
    std::optional<std::size_t> threads;
};

/// Selected ids, clamped to the configured case count.
std::vector<std::size_t> selected_cases(const Experiment& exp, const RunOptions& opts);

struct GenDataResult {
    std::size_t written = 0;
    std::size_t skipped = 0;
};
GenDataResult cmd_gen_data(const Experiment& exp, const RunOptions& opts);

struct RunMcmcResult {
    std::size_t chains_run = 0;
    std::size_t cases_skipped = 0;
};
RunMcmcResult cmd_run_mcmc(const Experiment& exp, const RunOptions& opts);

/// Runs one scoring chain for a case in memory (no files); returns log Lambda-hat.
double score_case_in_memory(const Experiment& exp, ObserverKind observer, std::size_t id);

struct DiagnoseResult {
    std::size_t reports = 0;
    /// case id -> report for every case with >= 2 chains on disk
    std::vector<std::pair<std::size_t, DiagnosticReport>> details;
};
DiagnoseResult cmd_diagnose(const Experiment& exp, const RunOptions& opts);

struct ObserverEvaluation {
    ObserverKind observer;
    ObserverScoreSet scores;
    std::vector<std::size_t> case_ids;
    RocResult roc;
};
struct EvaluateResult {
    std::vector<ObserverEvaluation> observers;
    std::string table;
};
EvaluateResult cmd_evaluate(const Experiment& exp, const RunOptions& opts);

struct SpectrumResult {
    RadialSpectrum real;
    RadialSpectrum generated;
    double max_relative_deviation = 0.0;
};
SpectrumResult cmd_spectrum(const Experiment& exp, const RunOptions& opts);

}  // namespace iomc::harness
