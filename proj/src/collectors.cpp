#include "yprov/collectors.hpp"

#include "yprov/error.hpp"

#include <sys/resource.h>
#include <unistd.h>

#include <fstream>

namespace yprov {

WallClockCollector::WallClockCollector() :
    origin_(std::chrono::steady_clock::now())
{}

std::vector<CollectorReading> WallClockCollector::sample()
{
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - origin_;
    return {{"wall_clock_s", elapsed.count()}};
}

std::vector<CollectorReading> ProcessCpuCollector::sample()
{
    rusage usage{};
    if (getrusage(RUSAGE_SELF, &usage) != 0) {
        fail(ErrorCode::IoError, "getrusage failed");
    }
    auto seconds = [](const timeval& tv) { return static_cast<double>(tv.tv_sec) + tv.tv_usec / 1e6; };
    return {{"process_cpu_s", seconds(usage.ru_utime) + seconds(usage.ru_stime)}};
}

std::vector<CollectorReading> ResidentMemoryCollector::sample()
{
    std::ifstream statm("/proc/self/statm");
    std::uint64_t total_pages = 0;
    std::uint64_t resident_pages = 0;
    if (!(statm >> total_pages >> resident_pages)) {
        fail(ErrorCode::IoError, "cannot read /proc/self/statm");
    }
    const auto page = static_cast<double>(sysconf(_SC_PAGESIZE));
    return {{"resident_memory_bytes", static_cast<double>(resident_pages) * page}};
}

MockEnergyCollector::MockEnergyCollector(double base, double slope, std::string id) :
    base_(base),
    slope_(slope),
    id_(std::move(id))
{}

std::vector<CollectorReading> MockEnergyCollector::sample()
{
    return {{"energy_joules", value_at(polls_++)}};
}

}  // namespace yprov
