#include "yprov/tracker.hpp"

#include "yprov/error.hpp"
#include "yprov/prov_json.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <stop_token>
#include <thread>

namespace yprov {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kMinCollectorIntervalMs = 10;

bool is_safe_component(std::string_view name)
{
    if (name.empty() || name == "." || name == "..") {
        return false;
    }
    return std::all_of(name.begin(), name.end(), [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return std::isalnum(u) || c == '_' || c == '.' || c == '-';
    });
}

void require_item_name(std::string_view name, std::string_view what)
{
    if (name.empty() || std::any_of(name.begin(), name.end(), [](char c) {
            return std::isspace(static_cast<unsigned char>(c)) != 0;
        })) {
        fail(ErrorCode::InvalidArgument, std::string(what) + " name must be non-empty without whitespace: '"
                                             + std::string(name) + "'");
    }
}

AttributeValue qualified(std::string_view type)
{
    return AttributeValue(std::string(type), "prov:QUALIFIED_NAME");
}

std::string environment_user()
{
    for (const char* var : {"USER", "USERNAME", "LOGNAME"}) {
        if (const char* value = std::getenv(var); value && *value) {
            return value;
        }
    }
    return "unknown";
}

std::string process_command_line()
{
    std::ifstream in("/proc/self/cmdline", std::ios::binary);
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    while (!raw.empty() && raw.back() == '\0') {
        raw.pop_back();
    }
    std::replace(raw.begin(), raw.end(), '\0', ' ');
    return raw;
}

std::string trim(std::string s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.pop_back();
    }
    return s;
}

/// Commit id of the repository enclosing `start`, following `.git` files and packed refs.
std::optional<std::string> discover_revision(const fs::path& start)
{
    std::error_code ec;
    for (auto dir = fs::absolute(start, ec); !dir.empty(); dir = dir.parent_path()) {
        auto git = dir / ".git";
        if (fs::is_regular_file(git, ec)) {
            const auto text = trim(read_file(git));
            if (!text.starts_with("gitdir:")) {
                return std::nullopt;
            }
            auto target = text.substr(7);
            target.erase(0, target.find_first_not_of(' '));
            git = fs::path(target).is_absolute() ? fs::path(target) : dir / target;
        }
        if (fs::is_directory(git, ec) && fs::exists(git / "HEAD", ec)) {
            const auto head = trim(read_file(git / "HEAD"));
            if (!head.starts_with("ref:")) {
                return head.empty() ? std::nullopt : std::optional(head);
            }
            auto ref = head.substr(4);
            ref.erase(0, ref.find_first_not_of(' '));
            if (fs::exists(git / ref, ec)) {
                return trim(read_file(git / ref));
            }
            if (fs::exists(git / "packed-refs", ec)) {
                std::ifstream packed(git / "packed-refs");
                std::string line;
                while (std::getline(packed, line)) {
                    const auto space = line.find(' ');
                    if (space != std::string::npos && line.substr(space + 1) == ref) {
                        return line.substr(0, space);
                    }
                }
            }
            return std::nullopt;
        }
        if (dir == dir.root_path()) {
            break;
        }
    }
    return std::nullopt;
}

fs::path create_run_dir(const fs::path& experiment_dir, const std::optional<std::string>& run_id, std::string& chosen)
{
    std::error_code ec;
    fs::create_directories(experiment_dir, ec);
    if (ec) {
        fail(ErrorCode::IoError, "cannot create " + experiment_dir.string() + ": " + ec.message());
    }
    if (run_id) {
        const auto dir = experiment_dir / *run_id;
        if (!fs::create_directory(dir, ec)) {
            if (ec) {
                fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
            }
            fail(ErrorCode::DuplicateRunId, *run_id);
        }
        chosen = *run_id;
        return dir;
    }
    long next = 0;
    for (const auto& entry : fs::directory_iterator(experiment_dir, ec)) {
        const auto name = entry.path().filename().string();
        if (!name.empty() && std::all_of(name.begin(), name.end(), [](char c) { return c >= '0' && c <= '9'; })
            && name.size() < 10) {
            next = std::max(next, std::stol(name) + 1);
        }
    }
    for (;; ++next) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04ld", next);
        const auto dir = experiment_dir / buf;
        if (fs::create_directory(dir, ec)) {
            chosen = buf;
            return dir;
        }
        if (ec) {
            fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------

fs::path effective_root(const ExperimentRef& experiment)
{
    if (const char* root = std::getenv(std::string(kRootEnvVar).c_str()); root && *root) {
        return root;
    }
    return experiment.root_dir;
}

Context::Context(std::string_view tag)
{
    for (const char c : tag) {
        const auto u = static_cast<unsigned char>(c);
        if (!(std::isalnum(u) || c == '_')) {
            fail(ErrorCode::InvalidArgument, "context tag may only hold letters, digits and '_': '"
                                                 + std::string(tag) + "'");
        }
        tag_.push_back(static_cast<char>(std::toupper(u)));
    }
    if (tag_.empty()) {
        fail(ErrorCode::InvalidArgument, "context tag must not be empty");
    }
}

bool Context::is_builtin() const noexcept
{
    return tag_ == "TRAINING" || tag_ == "VALIDATION" || tag_ == "TESTING";
}

TimestampMs SystemClock::now_ms()
{
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

ManualClock::ManualClock(TimestampMs start, TimestampMs tick) :
    now_(start),
    tick_(tick)
{}

TimestampMs ManualClock::now_ms()
{
    std::lock_guard lock(mutex_);
    const auto t = now_;
    now_ += tick_;
    return t;
}

void ManualClock::set(TimestampMs t)
{
    std::lock_guard lock(mutex_);
    now_ = t;
}

void ManualClock::advance(TimestampMs delta)
{
    std::lock_guard lock(mutex_);
    now_ += delta;
}

namespace ids {

QualifiedName experiment(std::string_view experiment_name)
{
    return yprov_name("experiment/" + std::string(experiment_name));
}

QualifiedName run(std::string_view experiment_name, std::string_view run_id)
{
    return yprov_name("run/" + std::string(experiment_name) + "/" + std::string(run_id));
}

QualifiedName run_summary(std::string_view experiment_name, std::string_view run_id)
{
    return yprov_name("run_summary/" + std::string(experiment_name) + "/" + std::string(run_id));
}

QualifiedName context(std::string_view run_id, const Context& context)
{
    return yprov_name("ctx/" + std::string(run_id) + "/" + context.tag());
}

QualifiedName parameter(std::string_view run_id, const std::optional<Context>& context, std::string_view name)
{
    return yprov_name("param/" + std::string(run_id) + "/" + (context ? context->tag() : std::string("-")) + "/"
                      + std::string(name));
}

QualifiedName metric(std::string_view run_id, const Context& context, std::string_view name)
{
    return yprov_name("metric/" + std::string(run_id) + "/" + context.tag() + "/" + std::string(name));
}

QualifiedName artifact(std::string_view run_id, std::string_view name)
{
    return yprov_name("artifact/" + std::string(run_id) + "/" + std::string(name));
}

QualifiedName library_agent()
{
    return yprov_name("agent/library");
}

QualifiedName user_agent(std::string_view user)
{
    std::string local = "agent/user/";
    for (const char c : user) {
        local.push_back(std::isspace(static_cast<unsigned char>(c)) ? '_' : c);
    }
    return yprov_name(local);
}

}  // namespace ids

std::optional<std::string> prov_type(const ProvRecord& record)
{
    const auto it = record.attributes.find("prov:type");
    if (it == record.attributes.end() || !it->second.is_string()) {
        return std::nullopt;
    }
    return it->second.as_string();
}

// ---------------------------------------------------------------------------
// RunHandle

struct RunHandle::Impl
{
    enum class Phase { Active, Stopping, Finalized };

    struct SeriesInfo
    {
        std::string name;
        Context context;
        Direction direction;
    };

    struct ContextSpan
    {
        std::optional<TimestampMs> first;
        std::optional<TimestampMs> last;
    };

    struct CollectorSlot
    {
        std::string id;
        std::unique_ptr<Collector> collector;
        std::uint32_t interval_ms = 0;
        std::atomic<std::uint64_t> errors{0};
        std::jthread thread;
    };

    ExperimentRef experiment;
    std::string run_id;
    fs::path run_dir;
    std::shared_ptr<Clock> clock;
    std::string user;
    std::string yprov_namespace;
    TimestampMs started_at = 0;
    std::optional<StoreWriter> store;

    mutable std::mutex mutex;
    Phase phase = Phase::Active;
    TimestampMs last_timestamp = std::numeric_limits<TimestampMs>::min();
    std::map<std::pair<std::string, std::string>, LoggedParameter> params;  // (context, name)
    std::map<std::string, LoggedArtifact> artifacts;
    std::map<std::pair<std::string, std::string>, SeriesInfo> series;       // (context, name)
    std::map<Context, ContextSpan> contexts;

    std::mutex collectors_mutex;
    std::condition_variable_any collectors_cv;
    std::vector<std::unique_ptr<CollectorSlot>> collectors;

    void require_active(std::unique_lock<std::mutex>&) const
    {
        if (phase != Phase::Active) {
            fail(ErrorCode::Finalized, "run " + run_id + " has ended");
        }
    }

    TimestampMs next_timestamp()
    {
        last_timestamp = std::max(last_timestamp, clock->now_ms());
        return last_timestamp;
    }

    void record_metric(std::string_view name, double value, const Context& context, std::uint64_t step,
                       std::uint32_t epoch, Direction direction, bool from_collector)
    {
        require_item_name(name, "metric");
        TimestampMs timestamp = 0;
        {
            std::unique_lock lock(mutex);
            if (from_collector ? phase == Phase::Finalized : phase != Phase::Active) {
                fail(ErrorCode::Finalized, "run " + run_id + " has ended");
            }
            const auto key = std::pair(context.tag(), std::string(name));
            if (const auto it = series.find(key); it != series.end() && it->second.direction != direction) {
                fail(ErrorCode::InvalidArgument, "metric " + std::string(name) + "@" + context.tag()
                                                     + " was first logged as "
                                                     + std::string(to_string(it->second.direction)));
            }
            timestamp = next_timestamp();
        }
        store->append(name, context.tag(), direction, MetricSample{step, epoch, timestamp, value});

        std::lock_guard lock(mutex);
        series.try_emplace(std::pair(context.tag(), std::string(name)), SeriesInfo{std::string(name), context, direction});
        auto& span = contexts[context];
        span.first = span.first ? std::min(*span.first, timestamp) : timestamp;
        span.last = span.last ? std::max(*span.last, timestamp) : timestamp;
    }

    void poll_loop(CollectorSlot& slot, std::stop_token stop)
    {
        auto next = std::chrono::steady_clock::now();
        for (std::uint64_t poll = 0; !stop.stop_requested(); ++poll) {
            try {
                for (const auto& reading : slot.collector->sample()) {
                    record_metric(reading.metric, reading.value, Context::system(), poll, 0, Direction::Output, true);
                }
            } catch (...) {
                ++slot.errors;
            }
            next += std::chrono::milliseconds(slot.interval_ms);
            std::unique_lock lock(collectors_mutex);
            collectors_cv.wait_until(lock, stop, next, [] { return false; });
        }
    }

    void stop_collectors()
    {
        std::vector<std::unique_ptr<CollectorSlot>>* slots = nullptr;
        {
            std::lock_guard lock(collectors_mutex);
            slots = &collectors;
            for (auto& slot : *slots) {
                slot->thread.request_stop();
            }
        }
        collectors_cv.notify_all();
        for (auto& slot : *slots) {
            if (slot->thread.joinable()) {
                slot->thread.join();
            }
        }
    }

    ProvDocument assemble(const RunArtifacts& paths, TimestampMs ended_at) const;
};

ProvDocument RunHandle::Impl::assemble(const RunArtifacts& paths, TimestampMs ended_at) const
{
    ProvDocument doc(yprov_namespace);
    const auto experiment_id = ids::experiment(experiment.name);
    const auto run = ids::run(experiment.name, run_id);
    const auto summary = ids::run_summary(experiment.name, run_id);

    doc.add_record(ProvRecord::entity(experiment_id, {{"prov:type", AttributeValue::qualified(QualifiedName("prov", "Collection"))},
                                                      {"yprov4ml:name", AttributeValue::string(experiment.name)}}));

    Attributes run_attrs{{"prov:type", qualified(types::kRunExecution)},
                         {"yprov4ml:experiment", AttributeValue::string(experiment.name)},
                         {"yprov4ml:run_id", AttributeValue::string(run_id)}};
    std::uint64_t total_errors = 0;
    for (const auto& slot : collectors) {
        const auto errors = slot->errors.load();
        total_errors += errors;
        run_attrs.emplace("yprov4ml:collector_errors/" + slot->id,
                          AttributeValue::integer(static_cast<std::int64_t>(errors)));
    }
    if (!collectors.empty()) {
        run_attrs.emplace("yprov4ml:collector_errors", AttributeValue::integer(static_cast<std::int64_t>(total_errors)));
    }
    doc.add_record(ProvRecord::activity(run, std::move(run_attrs), started_at, std::max(started_at, ended_at)));

    doc.add_record(ProvRecord::entity(
        summary, {{"prov:type", qualified(types::kRunSummary)},
                  {"yprov4ml:experiment", AttributeValue::string(experiment.name)},
                  {"yprov4ml:run_id", AttributeValue::string(run_id)},
                  {"yprov4ml:provenance_file", AttributeValue::string(paths.prov_json_path.filename().string())},
                  {"yprov4ml:store_file", AttributeValue::string(paths.store_path.filename().string())}}));
    doc.add_relation(RelationKind::HadMember, experiment_id, summary);

    const auto library = ids::library_agent();
    doc.add_record(ProvRecord::agent(library, {{"prov:type", AttributeValue::qualified(QualifiedName("prov", "SoftwareAgent"))},
                                               {"yprov4ml:name", AttributeValue::string("yprov")},
                                               {"yprov4ml:version", AttributeValue::string(std::string(kLibraryVersion))}}));
    const auto user_id = ids::user_agent(user);
    doc.add_record(ProvRecord::agent(user_id, {{"prov:type", AttributeValue::qualified(QualifiedName("prov", "Person"))},
                                               {"yprov4ml:name", AttributeValue::string(user)}}));
    doc.add_relation(RelationKind::WasAssociatedWith, run, library);
    doc.add_relation(RelationKind::WasAssociatedWith, run, user_id);

    // Every context touched by any logged item gets an activity informed by the run.
    std::set<Context> used_contexts;
    for (const auto& [key, param] : params) {
        if (param.context) {
            used_contexts.insert(*param.context);
        }
    }
    for (const auto& [key, info] : series) {
        used_contexts.insert(info.context);
    }
    for (const auto& [name, artifact] : artifacts) {
        if (artifact.context) {
            used_contexts.insert(*artifact.context);
        }
    }
    for (const auto& context : used_contexts) {
        std::optional<TimestampMs> first;
        std::optional<TimestampMs> last;
        if (const auto it = contexts.find(context); it != contexts.end()) {
            first = it->second.first;
            last = it->second.last;
        }
        const auto id = ids::context(run_id, context);
        doc.add_record(ProvRecord::activity(id,
                                            {{"prov:type", qualified(types::kContext)},
                                             {"yprov4ml:context", AttributeValue::string(context.tag())},
                                             {"yprov4ml:run_id", AttributeValue::string(run_id)}},
                                            first, last));
        doc.add_relation(RelationKind::WasInformedBy, id, run);
    }

    auto owner = [&](const std::optional<Context>& context) {
        return context ? ids::context(run_id, *context) : run;
    };
    auto link = [&](const QualifiedName& item, const QualifiedName& activity, Direction direction) {
        if (direction == Direction::Input) {
            doc.add_relation(RelationKind::Used, activity, item);
        } else {
            doc.add_relation(RelationKind::WasGeneratedBy, item, activity);
        }
    };

    for (const auto& [key, param] : params) {
        const auto id = ids::parameter(run_id, param.context, param.name);
        Attributes attrs{{"prov:type", qualified(types::kParameter)},
                         {"yprov4ml:name", AttributeValue::string(param.name)},
                         {"yprov4ml:value", param.value},
                         {"yprov4ml:direction", AttributeValue::string(std::string(to_string(param.direction)))}};
        if (param.context) {
            attrs.emplace("yprov4ml:context", AttributeValue::string(param.context->tag()));
        }
        doc.add_record(ProvRecord::entity(id, std::move(attrs)));
        link(id, owner(param.context), param.direction);
    }

    const auto store_series = store->series();
    for (const auto& [key, info] : series) {
        const auto it = std::find_if(store_series.begin(), store_series.end(), [&](const SeriesMeta& m) {
            return m.name == info.name && m.context == info.context.tag();
        });
        const auto id = ids::metric(run_id, info.context, info.name);
        doc.add_record(ProvRecord::entity(
            id, {{"prov:type", qualified(types::kMetricSeries)},
                 {"yprov4ml:name", AttributeValue::string(info.name)},
                 {"yprov4ml:context", AttributeValue::string(info.context.tag())},
                 {"yprov4ml:direction", AttributeValue::string(std::string(to_string(info.direction)))},
                 {"yprov4ml:sample_count",
                  AttributeValue::integer(it == store_series.end() ? 0 : static_cast<std::int64_t>(it->sample_count))},
                 {"yprov4ml:series_id",
                  AttributeValue::integer(it == store_series.end() ? -1 : static_cast<std::int64_t>(it->series_id))},
                 {"yprov4ml:store_file", AttributeValue::string(paths.store_path.filename().string())}}));
        link(id, owner(info.context), info.direction);
    }

    for (const auto& [name, artifact] : artifacts) {
        const auto id = ids::artifact(run_id, artifact.name);
        Attributes attrs{{"prov:type", qualified(types::kArtifact)},
                         {"yprov4ml:name", AttributeValue::string(artifact.name)},
                         {"yprov4ml:path", AttributeValue::string(artifact.path.generic_string())},
                         {"yprov4ml:sha256", AttributeValue::string(artifact.digest)},
                         {"yprov4ml:byte_size", AttributeValue::integer(static_cast<std::int64_t>(artifact.byte_size))},
                         {"yprov4ml:direction", AttributeValue::string(std::string(to_string(artifact.direction)))}};
        if (artifact.external) {
            attrs.emplace("yprov4ml:external", AttributeValue::boolean(true));
        }
        if (artifact.context) {
            attrs.emplace("yprov4ml:context", AttributeValue::string(artifact.context->tag()));
        }
        doc.add_record(ProvRecord::entity(id, std::move(attrs)));
        link(id, owner(artifact.context), artifact.direction);
    }
    return doc;
}

RunHandle::RunHandle(std::unique_ptr<Impl> impl) :
    impl_(std::move(impl))
{}

RunHandle::RunHandle(RunHandle&&) noexcept = default;
RunHandle& RunHandle::operator=(RunHandle&&) noexcept = default;

RunHandle::~RunHandle()
{
    if (impl_) {
        impl_->stop_collectors();
    }
}

const ExperimentRef& RunHandle::experiment() const noexcept
{
    return impl_->experiment;
}

const std::string& RunHandle::run_id() const noexcept
{
    return impl_->run_id;
}

const fs::path& RunHandle::run_dir() const noexcept
{
    return impl_->run_dir;
}

RunState RunHandle::state() const
{
    std::lock_guard lock(impl_->mutex);
    return impl_->phase == Impl::Phase::Active ? RunState::Active : RunState::Finalized;
}

void RunHandle::log_param(std::string_view name, AttributeValue value, std::optional<Context> context,
                          Direction direction)
{
    require_item_name(name, "parameter");
    std::unique_lock lock(impl_->mutex);
    impl_->require_active(lock);
    const auto key = std::pair(context ? context->tag() : std::string(), std::string(name));
    if (impl_->params.contains(key)) {
        fail(ErrorCode::DuplicateParameter, std::string(name) + (context ? "@" + context->tag() : std::string()));
    }
    impl_->params.emplace(key, LoggedParameter{std::string(name), std::move(value), std::move(context), direction});
}

void RunHandle::log_metric(std::string_view name, double value, const Context& context, std::uint64_t step,
                           std::uint32_t epoch, Direction direction)
{
    impl_->record_metric(name, value, context, step, epoch, direction, false);
}

LoggedArtifact RunHandle::log_artifact(const fs::path& src_path, std::optional<std::string> name,
                                       std::optional<Context> context, Direction direction)
{
    const auto artifact_name = name ? *name : src_path.filename().string();
    require_item_name(artifact_name, "artifact");
    const fs::path relative(artifact_name);
    if (relative.is_absolute() || std::any_of(relative.begin(), relative.end(), [](const fs::path& part) {
            return part == ".." || part == ".";
        })) {
        fail(ErrorCode::InvalidArgument, "artifact name must be a relative path inside artifacts/: " + artifact_name);
    }

    std::error_code ec;
    if (!fs::is_regular_file(src_path, ec)) {
        fail(ErrorCode::IoError, "cannot read artifact " + src_path.string());
    }

    {
        std::unique_lock lock(impl_->mutex);
        impl_->require_active(lock);
        if (impl_->artifacts.contains(artifact_name)) {
            fail(ErrorCode::NameCollision, artifact_name);
        }
        // Reserve the name while the copy runs outside the lock.
        impl_->artifacts.emplace(artifact_name, LoggedArtifact{});
    }

    LoggedArtifact artifact;
    artifact.name = artifact_name;
    artifact.context = context;
    artifact.direction = direction;
    try {
        if (direction == Direction::Input) {
            artifact.path = fs::absolute(src_path).lexically_normal();
            artifact.external = true;
        } else {
            const auto dest = impl_->run_dir / kArtifactsDir / relative;
            fs::create_directories(dest.parent_path());
            fs::copy_file(src_path, dest, fs::copy_options::overwrite_existing);
            artifact.path = fs::path(kArtifactsDir) / relative;
        }
        const auto digest_source = artifact.external ? artifact.path : impl_->run_dir / artifact.path;
        artifact.digest = sha256_file(digest_source);
        artifact.byte_size = fs::file_size(digest_source);
    } catch (const fs::filesystem_error& e) {
        std::lock_guard lock(impl_->mutex);
        impl_->artifacts.erase(artifact_name);
        fail(ErrorCode::IoError, e.what());
    } catch (...) {
        std::lock_guard lock(impl_->mutex);
        impl_->artifacts.erase(artifact_name);
        throw;
    }

    std::lock_guard lock(impl_->mutex);
    impl_->artifacts[artifact_name] = artifact;
    return artifact;
}

void RunHandle::register_collector(std::unique_ptr<Collector> collector, std::uint32_t interval_ms)
{
    if (!collector) {
        fail(ErrorCode::InvalidArgument, "null collector");
    }
    if (interval_ms < kMinCollectorIntervalMs) {
        fail(ErrorCode::InvalidArgument, "collector interval must be at least 10 ms");
    }
    {
        std::unique_lock lock(impl_->mutex);
        impl_->require_active(lock);
    }
    std::lock_guard lock(impl_->collectors_mutex);
    const auto id = collector->id();
    for (const auto& slot : impl_->collectors) {
        if (slot->id == id) {
            fail(ErrorCode::DuplicateCollectorId, id);
        }
    }
    auto slot = std::make_unique<Impl::CollectorSlot>();
    slot->id = id;
    slot->collector = std::move(collector);
    slot->interval_ms = interval_ms;
    auto* raw = slot.get();
    auto* impl = impl_.get();
    slot->thread = std::jthread([impl, raw](std::stop_token stop) { impl->poll_loop(*raw, stop); });
    impl_->collectors.push_back(std::move(slot));
}

std::uint64_t RunHandle::collector_errors(std::string_view collector_id) const
{
    std::lock_guard lock(impl_->collectors_mutex);
    for (const auto& slot : impl_->collectors) {
        if (slot->id == collector_id) {
            return slot->errors.load();
        }
    }
    return 0;
}

RunArtifacts RunHandle::end_run()
{
    {
        std::unique_lock lock(impl_->mutex);
        impl_->require_active(lock);
        impl_->phase = Impl::Phase::Stopping;
    }
    impl_->stop_collectors();

    RunArtifacts paths{impl_->run_dir, impl_->run_dir / kProvenanceFile, impl_->run_dir / kStoreFile};
    std::unique_lock lock(impl_->mutex);
    impl_->store->finalize();

    // Digests must describe the files as they are at finalize time.
    for (auto& [name, artifact] : impl_->artifacts) {
        const auto source = artifact.external ? artifact.path : impl_->run_dir / artifact.path;
        artifact.digest = sha256_file(source);
        artifact.byte_size = fs::file_size(source);
    }

    const auto ended_at = impl_->next_timestamp();
    const auto doc = impl_->assemble(paths, ended_at);
    save_document(paths.prov_json_path, doc);
    impl_->phase = Impl::Phase::Finalized;
    return paths;
}

RunHandle start_run(const ExperimentRef& experiment, RunOptions options)
{
    if (!is_safe_component(experiment.name)) {
        fail(ErrorCode::InvalidArgument, "experiment name must use [A-Za-z0-9_.-]: '" + experiment.name + "'");
    }
    if (options.run_id && !is_safe_component(*options.run_id)) {
        fail(ErrorCode::InvalidArgument, "run id must use [A-Za-z0-9_.-]: '" + *options.run_id + "'");
    }

    auto impl = std::make_unique<RunHandle::Impl>();
    impl->experiment = experiment;
    impl->experiment.root_dir = effective_root(experiment);
    impl->clock = options.clock ? options.clock : std::make_shared<SystemClock>();
    impl->user = options.user ? *options.user : environment_user();
    impl->yprov_namespace = options.yprov_namespace;

    const auto experiment_dir = impl->experiment.root_dir / experiment.name;
    impl->run_dir = create_run_dir(experiment_dir, options.run_id, impl->run_id);

    std::error_code ec;
    fs::create_directory(impl->run_dir / kArtifactsDir, ec);
    if (ec) {
        fail(ErrorCode::IoError, "cannot create artifacts dir: " + ec.message());
    }
    impl->store.emplace(StoreWriter::create(impl->run_dir / kStoreFile, options.store));
    impl->started_at = impl->clock->now_ms();
    impl->last_timestamp = impl->started_at;

    RunHandle handle(std::move(impl));
    if (options.capture_env) {
        handle.log_param("command_line",
                         AttributeValue::string(options.command_line ? *options.command_line : process_command_line()),
                         std::nullopt, Direction::Input);
        handle.log_param("working_dir", AttributeValue::string(fs::current_path().string()), std::nullopt,
                         Direction::Input);
        if (const auto revision = discover_revision(fs::current_path())) {
            handle.log_param("source_revision", AttributeValue::string(*revision), std::nullopt, Direction::Input);
        }
    }
    return handle;
}

}  // namespace yprov
