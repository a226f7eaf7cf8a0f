#pragma once

#include "ldae/config.hpp"

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace ldae {

struct ResultRow {
    std::string experiment;
    std::string variant;
    int d = 0;
    int n = 0;
    double c = 0.0;
    int r = 0;
    int k = 0;
    double eta_trn = 0.0;
    double eta_tst = 0.0;
    std::uint64_t seed = 0;
    std::string index_set;
    std::optional<double> theory_bias;
    std::optional<double> theory_variance;
    std::optional<double> theory_total;
    std::optional<double> emp_mean;
    std::optional<double> emp_stderr;
    std::string extra;  // key=value pairs joined by ';'
};

struct GridPoint {
    int d = 0;
    int n = 0;
    int k = 0;
    int r = 0;
    double eta_trn = 1.0;
    double eta_tst = 1.0;
    // Index over the data-defining coordinates (d, n, r, eta_trn, eta_tst)
    // only. Points that differ just in k share it, and with it their data.
    std::size_t data_index = 0;
};

std::vector<GridPoint> expand_grid(const SweepSpec& spec);

/// Rows for every (grid point, trial), ordered by grid point, then trial,
/// then variant and index set. The per-trial seed is
/// derive_seed(base_seed, data_index, trial), so a k sweep compares
/// bottlenecks on identical draws. Failures become rows whose extra
/// field starts with "error=". workers <= 0 uses spec.workers.
std::vector<ResultRow> run_sweep(const SweepSpec& spec, int workers = 0);

const std::vector<std::string>& csv_header();
std::string format_csv(const std::vector<ResultRow>& rows);
void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);

/// Evaluates fn(0..count-1) on a pool of threads and returns the results in
/// index order, so the output does not depend on the pool size.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, int workers, Fn fn) {
    std::vector<T> out(count);
    const std::size_t pool = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), std::max<std::size_t>(count, 1));
    if (pool <= 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(pool);
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < pool; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < count; i = next++) out[i] = fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace ldae
