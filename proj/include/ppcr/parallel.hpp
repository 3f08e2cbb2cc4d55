#pragma once

#include "ppcr/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ppcr {

enum class Execution { serial, parallel };

/// Replications are grouped into blocks of this many; the grouping never
/// depends on the thread count.
inline constexpr std::size_t kReplicationBlock = 32;

int max_threads();
void set_threads(int n);

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    void merge(const CompensatedSum& o) {
        add(o.sum_);
        add(o.comp_);
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Count, mean and sample variance of a scalar statistic.
class ScalarStats {
public:
    void add(double x) {
        sum_.add(x);
        sumsq_.add(x * x);
        ++count_;
    }
    void merge(const ScalarStats& o) {
        sum_.merge(o.sum_);
        sumsq_.merge(o.sumsq_);
        count_ += o.count_;
    }
    std::size_t count() const { return count_; }
    double mean() const { return count_ == 0 ? 0.0 : sum_.value() / static_cast<double>(count_); }
    /// Sample variance (n - 1 denominator); zero when count < 2.
    double variance() const {
        if (count_ < 2) return 0.0;
        const double n = static_cast<double>(count_);
        const double m = sum_.value() / n;
        return std::max(0.0, (sumsq_.value() - n * m * m) / (n - 1.0));
    }
    /// Standard error of the mean; negative (absent) when count < 2.
    double std_error() const {
        if (count_ < 2) return -1.0;
        return std::sqrt(variance() / static_cast<double>(count_));
    }

private:
    CompensatedSum sum_;
    CompensatedSum sumsq_;
    std::size_t count_ = 0;
};

/// Runs body(rep, rng, acc) for rep in [0, reps). Replication r always draws
/// from RandomStream::derive(seed, r). Each fixed-size block of replications
/// accumulates into its own Acc in rep order; blocks are merged in block
/// order, so Execution::serial and Execution::parallel give identical bits.
template <class Acc, class MakeAcc, class Body>
Acc replicate(std::size_t reps, std::uint64_t seed, Execution exec, MakeAcc&& make, Body&& body) {
    const std::size_t blocks = (reps + kReplicationBlock - 1) / kReplicationBlock;
    std::vector<Acc> partial;
    partial.reserve(blocks);
    for (std::size_t b = 0; b < blocks; ++b) partial.push_back(make());

    auto run_block = [&](std::size_t b) {
        const std::size_t first = b * kReplicationBlock;
        const std::size_t last = std::min(reps, first + kReplicationBlock);
        for (std::size_t r = first; r < last; ++r) {
            RandomStream rng = RandomStream::derive(seed, r);
            body(r, rng, partial[b]);
        }
    };

    if (exec == Execution::parallel) {
        std::exception_ptr failure;
        const auto n = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t b = 0; b < n; ++b) {
            try {
                run_block(static_cast<std::size_t>(b));
            } catch (...) {
#pragma omp critical(ppcr_replicate_failure)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    } else {
        for (std::size_t b = 0; b < blocks; ++b) run_block(b);
    }

    Acc total = make();
    for (auto& p : partial) total.merge(p);
    return total;
}

}  // namespace ppcr
