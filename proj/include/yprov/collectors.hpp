#pragma once

// Plugin interface for system metric sources polled by a run, plus built-ins.

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

namespace yprov {

struct CollectorReading
{
    std::string metric;
    double value = 0.0;
};

/// `sample()` may throw; the run records the failure and keeps polling.
class Collector
{
public:
    virtual ~Collector() = default;

    [[nodiscard]] virtual std::string id() const = 0;
    virtual std::vector<CollectorReading> sample() = 0;
};

/// `wall_clock_s`: seconds since the collector was constructed.
class WallClockCollector : public Collector
{
public:
    WallClockCollector();
    [[nodiscard]] std::string id() const override { return "wall_clock"; }
    std::vector<CollectorReading> sample() override;

private:
    std::chrono::steady_clock::time_point origin_;
};

/// `process_cpu_s`: user + system CPU time of this process.
class ProcessCpuCollector : public Collector
{
public:
    [[nodiscard]] std::string id() const override { return "process_cpu"; }
    std::vector<CollectorReading> sample() override;
};

/// `resident_memory_bytes` from /proc/self/statm.
class ResidentMemoryCollector : public Collector
{
public:
    [[nodiscard]] std::string id() const override { return "resident_memory"; }
    std::vector<CollectorReading> sample() override;
};

/// Deterministic stand-in for an energy meter: the k-th poll reports
/// `energy_joules = base + slope * k`.
class MockEnergyCollector : public Collector
{
public:
    MockEnergyCollector(double base = 0.0, double slope = 1.0, std::string id = "mock_energy");

    [[nodiscard]] std::string id() const override { return id_; }
    std::vector<CollectorReading> sample() override;

    [[nodiscard]] double value_at(std::uint64_t poll) const noexcept { return base_ + slope_ * static_cast<double>(poll); }

private:
    double base_;
    double slope_;
    std::string id_;
    std::uint64_t polls_ = 0;
};

}  // namespace yprov
