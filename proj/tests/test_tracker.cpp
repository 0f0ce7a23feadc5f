#include "test_support.hpp"

#include "yprov/error.hpp"
#include "yprov/prov_json.hpp"
#include "yprov/tracker.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <map>
#include <set>
#include <thread>

using namespace yprov;
using yprov::testing::Rng;
using yprov::testing::TempDir;
namespace fs = std::filesystem;

namespace {

class TrackerTest : public ::testing::Test
{
protected:
    void SetUp() override { ::unsetenv(std::string(kRootEnvVar).c_str()); }
    void TearDown() override { ::unsetenv(std::string(kRootEnvVar).c_str()); }

    ExperimentRef experiment(const std::string& name = "mnist") const { return {name, dir_.path()}; }

    static RunOptions fixed_options(std::string run_id = {})
    {
        RunOptions options;
        if (!run_id.empty()) {
            options.run_id = std::move(run_id);
        }
        options.clock = std::make_shared<ManualClock>(1'700'000'000'000, 1);
        options.user = "tester";
        options.command_line = "train --epochs 3";
        return options;
    }

    TempDir dir_;
};

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::InvalidArgument;
}

ProvDocument load(const RunArtifacts& artifacts)
{
    return load_document(artifacts.prov_json_path).document;
}

std::map<std::string, std::size_t> count_types(const ProvDocument& doc)
{
    std::map<std::string, std::size_t> counts;
    for (const auto& record : doc.records()) {
        if (const auto type = prov_type(record)) {
            ++counts[*type];
        }
    }
    return counts;
}

bool is_item(const ProvDocument& doc, const QualifiedName& id)
{
    const auto* record = doc.find(id);
    if (record == nullptr) {
        return false;
    }
    const auto type = prov_type(*record);
    return type == types::kParameter || type == types::kMetricSeries || type == types::kArtifact;
}

struct ItemLinks
{
    std::size_t used = 0;
    std::size_t generated = 0;
    std::map<std::string, int> per_item;
};

ItemLinks item_links(const ProvDocument& doc)
{
    ItemLinks links;
    for (const auto& r : doc.relations()) {
        if (r.kind == RelationKind::Used && is_item(doc, r.object)) {
            ++links.used;
            ++links.per_item[r.object.str()];
        }
        if (r.kind == RelationKind::WasGeneratedBy && is_item(doc, r.subject)) {
            ++links.generated;
            ++links.per_item[r.subject.str()];
        }
    }
    return links;
}

fs::path write_blob(const fs::path& path, std::string_view content)
{
    write_file_atomic(path, content);
    return path;
}

class FailingCollector : public Collector
{
public:
    [[nodiscard]] std::string id() const override { return "broken"; }
    std::vector<CollectorReading> sample() override { throw std::runtime_error("sensor offline"); }
};

}  // namespace

TEST_F(TrackerTest, FirstRunIdIsZeroPaddedCounter)
{
    auto first = start_run(experiment());
    EXPECT_EQ(first.run_id(), "0000");
    EXPECT_TRUE(fs::is_directory(dir_.path() / "mnist" / "0000" / "artifacts"));
    EXPECT_TRUE(fs::exists(dir_.path() / "mnist" / "0000" / "metrics.ypms"));
    auto second = start_run(experiment());
    EXPECT_EQ(second.run_id(), "0001");
    fs::create_directories(dir_.path() / "mnist" / "0041");
    EXPECT_EQ(start_run(experiment()).run_id(), "0042");
}

TEST_F(TrackerTest, ExplicitRunIdTwiceIsDuplicate)
{
    auto run = start_run(experiment(), fixed_options("rank3"));
    EXPECT_EQ(run.run_id(), "rank3");
    EXPECT_EQ(code_of([&] { (void)start_run(experiment(), fixed_options("rank3")); }), ErrorCode::DuplicateRunId);
}

TEST_F(TrackerTest, UnsafeNamesRejected)
{
    EXPECT_EQ(code_of([&] { (void)start_run(experiment("../up")); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { (void)start_run(experiment(""), {}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { (void)start_run(experiment(), fixed_options("a/b")); }), ErrorCode::InvalidArgument);
}

TEST_F(TrackerTest, CaptureEnvOutsideRepositoryOmitsRevision)
{
    const auto cwd = fs::current_path();
    fs::current_path(dir_.path());
    auto options = fixed_options();
    options.capture_env = true;
    auto run = start_run(experiment(), options);
    const auto doc = load(run.end_run());
    fs::current_path(cwd);
    std::set<std::string> names;
    for (const auto& record : doc.records()) {
        if (prov_type(record) == types::kParameter) {
            names.insert(record.attributes.at("yprov4ml:name").as_string());
            EXPECT_EQ(record.attributes.at("yprov4ml:direction").as_string(), "input");
        }
    }
    EXPECT_EQ(names, (std::set<std::string>{"command_line", "working_dir"}));
    EXPECT_EQ(item_links(doc).used, 2u);
}

TEST_F(TrackerTest, CaptureEnvFindsRevision)
{
    const auto repo = dir_.path() / "repo";
    fs::create_directories(repo / ".git" / "refs" / "heads");
    write_blob(repo / ".git" / "HEAD", "ref: refs/heads/main\n");
    write_blob(repo / ".git" / "refs" / "heads" / "main", "0123456789abcdef0123456789abcdef01234567\n");
    const auto cwd = fs::current_path();
    fs::current_path(repo);
    auto options = fixed_options();
    options.capture_env = true;
    auto run = start_run({"exp", repo / "runs"}, options);
    const auto doc = load(run.end_run());
    fs::current_path(cwd);
    const auto* revision = doc.find(ids::parameter(run.run_id(), std::nullopt, "source_revision"));
    ASSERT_NE(revision, nullptr);
    EXPECT_EQ(revision->attributes.at("yprov4ml:value").as_string(), "0123456789abcdef0123456789abcdef01234567");
}

TEST_F(TrackerTest, MinimalRunHasSkeletonOnly)
{
    auto run = start_run(experiment(), fixed_options());
    const auto artifacts = run.end_run();
    EXPECT_EQ(artifacts.prov_json_path, run.run_dir() / "provenance.json");
    EXPECT_EQ(artifacts.store_path, run.run_dir() / "metrics.ypms");
    const auto parsed = parse(read_file(artifacts.prov_json_path));
    const auto& doc = parsed.document;
    EXPECT_TRUE(doc.validate().empty());
    EXPECT_NE(doc.find(ids::experiment("mnist")), nullptr);
    const auto* activity = doc.find(ids::run("mnist", run.run_id()));
    ASSERT_NE(activity, nullptr);
    EXPECT_EQ(activity->kind, RecordKind::Activity);
    EXPECT_TRUE(activity->start_time && activity->end_time);
    EXPECT_LE(*activity->start_time, *activity->end_time);
    EXPECT_NE(doc.find(ids::library_agent()), nullptr);
    EXPECT_NE(doc.find(ids::user_agent("tester")), nullptr);
    const auto counts = count_types(doc);
    EXPECT_EQ(counts.count(std::string(types::kMetricSeries)), 0u);
    EXPECT_EQ(counts.count(std::string(types::kParameter)), 0u);
    EXPECT_EQ(yprov::testing::count_relations(doc, RelationKind::HadMember), 1u);
    EXPECT_EQ(yprov::testing::count_relations(doc, RelationKind::WasAssociatedWith), 2u);
}

TEST_F(TrackerTest, DirectionCountsForMixedRun)
{
    auto run = start_run(experiment(), fixed_options());
    run.log_param("lr", AttributeValue::real(1e-3), Context::training(), Direction::Input);
    run.log_param("final_acc", AttributeValue::real(0.91));
    for (std::uint64_t step = 0; step < 10; ++step) {
        run.log_metric("loss", 1.0 / static_cast<double>(step + 1), Context::training(), step);
    }
    run.log_artifact(write_blob(dir_ / "model.ckpt", "weights"), std::nullopt, Context::training());
    const auto doc = load(run.end_run());
    const auto links = item_links(doc);
    EXPECT_EQ(links.used, 1u);
    EXPECT_EQ(links.generated, 3u);

    const auto lr = ids::parameter(run.run_id(), Context::training(), "lr");
    const auto ctx = ids::context(run.run_id(), Context::training());
    const auto run_id = ids::run("mnist", run.run_id());
    bool lr_used_by_ctx = false;
    bool acc_from_run = false;
    for (const auto& r : doc.relations()) {
        lr_used_by_ctx |= r.kind == RelationKind::Used && r.subject == ctx && r.object == lr;
        acc_from_run |= r.kind == RelationKind::WasGeneratedBy
                        && r.subject == ids::parameter(run.run_id(), std::nullopt, "final_acc") && r.object == run_id;
    }
    EXPECT_TRUE(lr_used_by_ctx);
    EXPECT_TRUE(acc_from_run);

    const auto* lr_record = doc.find(lr);
    ASSERT_NE(lr_record, nullptr);
    EXPECT_EQ(lr_record->attributes.at("yprov4ml:value"), AttributeValue::real(1e-3));
    const auto* metric = doc.find(ids::metric(run.run_id(), Context::training(), "loss"));
    ASSERT_NE(metric, nullptr);
    EXPECT_EQ(metric->attributes.at("yprov4ml:sample_count"), AttributeValue::integer(10));
    EXPECT_EQ(metric->attributes.at("yprov4ml:store_file").as_string(), "metrics.ypms");
    EXPECT_TRUE(doc.validate().empty());
}

TEST_F(TrackerTest, ContextsBecomeActivitiesInformedByRun)
{
    ManualClock* clock = nullptr;
    auto options = fixed_options();
    auto manual = std::make_shared<ManualClock>(1000);
    clock = manual.get();
    options.clock = manual;
    auto run = start_run(experiment(), options);
    clock->set(2000);
    run.log_metric("loss", 0.5, Context::training(), 0);
    clock->set(5000);
    run.log_metric("loss", 0.4, Context::training(), 1);
    run.log_metric("acc", 0.8, Context("holdout"), 0);
    clock->set(9000);
    const auto doc = load(run.end_run());

    const auto* training = doc.find(ids::context(run.run_id(), Context::training()));
    ASSERT_NE(training, nullptr);
    EXPECT_EQ(training->start_time, 2000);
    EXPECT_EQ(training->end_time, 5000);
    EXPECT_NE(doc.find(ids::context(run.run_id(), Context("HOLDOUT"))), nullptr);
    EXPECT_EQ(doc.find(ids::context(run.run_id(), Context::validation())), nullptr);
    EXPECT_EQ(yprov::testing::count_relations(doc, RelationKind::WasInformedBy), 2u);
    for (const auto& r : doc.relations()) {
        if (r.kind == RelationKind::WasInformedBy) {
            EXPECT_EQ(r.object, ids::run("mnist", run.run_id()));
        }
    }
    const auto* run_activity = doc.find(ids::run("mnist", run.run_id()));
    EXPECT_EQ(run_activity->start_time, 1000);
    EXPECT_EQ(run_activity->end_time, 9000);
}

TEST_F(TrackerTest, ContextTags)
{
    EXPECT_EQ(Context("training"), Context::training());
    EXPECT_TRUE(Context("Validation").is_builtin());
    EXPECT_FALSE(Context("fold_1").is_builtin());
    EXPECT_EQ(Context("fold_1").tag(), "FOLD_1");
    EXPECT_THROW(Context(""), Error);
    EXPECT_THROW(Context("a b"), Error);
}

TEST_F(TrackerTest, LoggingErrors)
{
    auto run = start_run(experiment(), fixed_options());
    run.log_param("lr", AttributeValue::real(0.1), Context::training());
    EXPECT_EQ(code_of([&] { run.log_param("lr", AttributeValue::real(0.2), Context("TRAINING")); }),
              ErrorCode::DuplicateParameter);
    run.log_param("lr", AttributeValue::real(0.2));
    run.log_metric("loss", 1.0, Context::training(), 5);
    EXPECT_EQ(code_of([&] { run.log_metric("loss", 1.0, Context::training(), 4); }), ErrorCode::NonMonotoneStep);
    run.log_metric("loss", 1.0, Context::validation(), 0);

    const auto blob = write_blob(dir_ / "weights.bin", "abc");
    run.log_artifact(blob);
    EXPECT_EQ(code_of([&] { run.log_artifact(write_blob(dir_ / "other.bin", "x"), "weights.bin"); }),
              ErrorCode::NameCollision);
    EXPECT_EQ(code_of([&] { run.log_artifact(dir_ / "missing.bin"); }), ErrorCode::IoError);
    run.log_artifact(write_blob(dir_ / "retry.bin", "y"), "missing.bin");

    EXPECT_EQ(run.state(), RunState::Active);
    run.end_run();
    EXPECT_EQ(run.state(), RunState::Finalized);
    EXPECT_EQ(code_of([&] { run.end_run(); }), ErrorCode::Finalized);
    EXPECT_EQ(code_of([&] { run.log_param("x", AttributeValue::integer(1)); }), ErrorCode::Finalized);
    EXPECT_EQ(code_of([&] { run.log_metric("loss", 1.0, Context::training(), 9); }), ErrorCode::Finalized);
    EXPECT_EQ(code_of([&] { run.log_artifact(blob, "late"); }), ErrorCode::Finalized);
    EXPECT_EQ(code_of([&] { run.register_collector(std::make_unique<MockEnergyCollector>(), 50); }),
              ErrorCode::Finalized);
}

TEST_F(TrackerTest, ArtifactsCopiedOrReferenced)
{
    auto run = start_run(experiment(), fixed_options());
    const auto output = run.log_artifact(write_blob(dir_ / "model.ckpt", "weights-v1"));
    EXPECT_EQ(output.path, fs::path("artifacts") / "model.ckpt");
    EXPECT_FALSE(output.external);
    EXPECT_EQ(read_file(run.run_dir() / "artifacts" / "model.ckpt"), "weights-v1");
    EXPECT_EQ(output.digest, sha256_file(dir_ / "model.ckpt"));
    EXPECT_EQ(output.byte_size, 10u);

    const auto input = run.log_artifact(write_blob(dir_ / "data.csv", "a,b\n1,2\n"), "dataset", std::nullopt,
                                        Direction::Input);
    EXPECT_TRUE(input.external);
    EXPECT_TRUE(input.path.is_absolute());
    EXPECT_FALSE(fs::exists(run.run_dir() / "artifacts" / "dataset"));

    const auto doc = load(run.end_run());
    const auto* record = doc.find(ids::artifact(run.run_id(), "dataset"));
    ASSERT_NE(record, nullptr);
    EXPECT_EQ(record->attributes.at("yprov4ml:external"), AttributeValue::boolean(true));
    EXPECT_EQ(record->attributes.at("yprov4ml:sha256").as_string(), sha256_file(dir_ / "data.csv"));
    const auto* copied = doc.find(ids::artifact(run.run_id(), "model.ckpt"));
    ASSERT_NE(copied, nullptr);
    EXPECT_EQ(copied->attributes.at("yprov4ml:path").as_string(), "artifacts/model.ckpt");
    EXPECT_EQ(copied->attributes.count("yprov4ml:external"), 0u);
}

TEST_F(TrackerTest, CompletenessAndDirectionProperty)
{
    Rng rng(808);
    for (int trial = 0; trial < 12; ++trial) {
        auto run = start_run(experiment(), fixed_options("t" + std::to_string(trial)));
        const std::vector<std::optional<Context>> contexts = {std::nullopt, Context::training(),
                                                              Context::validation(), Context("extra")};
        std::size_t params = 0;
        std::size_t artifacts = 0;
        std::set<std::pair<std::string, std::string>> series;
        std::map<std::string, Direction> series_direction;
        std::size_t inputs = 0;
        std::size_t outputs = 0;
        const auto n_params = rng.range(0, 8);
        for (std::int64_t i = 0; i < n_params; ++i) {
            const auto direction = rng.chance(0.5) ? Direction::Input : Direction::Output;
            run.log_param("p" + std::to_string(i), yprov::testing::random_attribute(rng), rng.pick(contexts),
                          direction);
            ++params;
            ++(direction == Direction::Input ? inputs : outputs);
        }
        const auto n_metrics = rng.range(0, 20);
        for (std::int64_t i = 0; i < n_metrics; ++i) {
            const auto name = "m" + std::to_string(rng.range(0, 3));
            const auto context = rng.pick(contexts).value_or(Context::testing());
            const auto key = name + "/" + context.tag();
            const auto direction = series_direction.emplace(key, rng.chance(0.3) ? Direction::Input : Direction::Output)
                                       .first->second;
            run.log_metric(name, rng.gaussian(), context, static_cast<std::uint64_t>(i), 0, direction);
            if (series.emplace(name, context.tag()).second) {
                ++(direction == Direction::Input ? inputs : outputs);
            }
        }
        const auto n_artifacts = rng.range(0, 4);
        for (std::int64_t i = 0; i < n_artifacts; ++i) {
            const auto direction = rng.chance(0.5) ? Direction::Input : Direction::Output;
            const auto file = write_blob(dir_ / ("f" + std::to_string(trial) + "_" + std::to_string(i)),
                                         rng.text(40));
            run.log_artifact(file, std::nullopt, rng.pick(contexts), direction);
            ++artifacts;
            ++(direction == Direction::Input ? inputs : outputs);
        }
        const auto doc = load(run.end_run());
        auto counts = count_types(doc);
        ASSERT_EQ(counts[std::string(types::kParameter)], params);
        ASSERT_EQ(counts[std::string(types::kMetricSeries)], series.size());
        ASSERT_EQ(counts[std::string(types::kArtifact)], artifacts);
        const auto links = item_links(doc);
        ASSERT_EQ(links.used, inputs);
        ASSERT_EQ(links.generated, outputs);
        for (const auto& [item, n] : links.per_item) {
            ASSERT_EQ(n, 1) << item;
        }
        ASSERT_EQ(links.per_item.size(), params + series.size() + artifacts);
        ASSERT_TRUE(doc.validate().empty());
    }
}

TEST_F(TrackerTest, MetricFidelity)
{
    Rng rng(77);
    auto run = start_run(experiment(), fixed_options());
    std::map<std::pair<std::string, std::string>, std::vector<MetricSample>> logged;
    const std::vector<Context> contexts = {Context::training(), Context::validation()};
    std::map<std::pair<std::string, std::string>, std::uint64_t> next_step;
    for (int i = 0; i < 12'000; ++i) {
        const auto name = rng.pick(std::vector<std::string>{"loss", "acc", "lr"});
        const auto& context = rng.pick(contexts);
        const auto key = std::make_pair(name, context.tag());
        const auto [it, fresh] = next_step.emplace(key, 0);
        auto& step = it->second;
        if (!fresh) {
            step += static_cast<std::uint64_t>(rng.range(1, 3));
        }
        const auto epoch = static_cast<std::uint32_t>(step / 100);
        const double value = rng.chance(0.01) ? std::numeric_limits<double>::quiet_NaN() : rng.gaussian();
        run.log_metric(name, value, context, step, epoch);
        logged[key].push_back({step, epoch, 0, value});
    }
    const auto artifacts = run.end_run();
    for (const auto& [key, samples] : logged) {
        const auto back = read_series(artifacts.store_path, key.first, key.second);
        ASSERT_EQ(back.size(), samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            auto expected = samples[i];
            expected.timestamp = back[i].timestamp;
            ASSERT_EQ(back[i], expected) << key.first << " " << i;
            if (i > 0) {
                ASSERT_GE(back[i].timestamp, back[i - 1].timestamp);
            }
        }
    }
}

TEST_F(TrackerTest, MockEnergyCollectorPollsOnCadence)
{
    RunOptions options;
    options.user = "tester";
    auto run = start_run(experiment(), options);
    MockEnergyCollector reference(10.0, 0.5);
    run.register_collector(std::make_unique<MockEnergyCollector>(10.0, 0.5), 50);
    EXPECT_EQ(code_of([&] { run.register_collector(std::make_unique<MockEnergyCollector>(), 50); }),
              ErrorCode::DuplicateCollectorId);
    EXPECT_EQ(code_of([&] { run.register_collector(std::make_unique<MockEnergyCollector>(0, 1, "fast"), 5); }),
              ErrorCode::InvalidArgument);
    std::this_thread::sleep_for(std::chrono::milliseconds(1000));
    const auto artifacts = run.end_run();
    const auto samples = read_series(artifacts.store_path, "energy_joules", "SYSTEM");
    EXPECT_GE(samples.size(), 18u);
    EXPECT_LE(samples.size(), 22u);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        EXPECT_EQ(samples[i].step, i);
        EXPECT_DOUBLE_EQ(samples[i].value, reference.value_at(i));
    }
    const auto doc = load(artifacts);
    EXPECT_NE(doc.find(ids::metric(run.run_id(), Context::system(), "energy_joules")), nullptr);
}

TEST_F(TrackerTest, FailingCollectorIsIsolated)
{
    auto run = start_run(experiment(), fixed_options());
    run.register_collector(std::make_unique<FailingCollector>(), 10);
    run.register_collector(std::make_unique<MockEnergyCollector>(), 10);
    std::this_thread::sleep_for(std::chrono::milliseconds(120));
    run.log_metric("loss", 1.0, Context::training(), 0);
    EXPECT_GT(run.collector_errors("broken"), 0u);
    EXPECT_EQ(run.collector_errors("mock_energy"), 0u);
    const auto doc = load(run.end_run());
    const auto* activity = doc.find(ids::run("mnist", run.run_id()));
    ASSERT_NE(activity, nullptr);
    const auto& errors = activity->attributes.at("yprov4ml:collector_errors");
    EXPECT_GT(std::get<std::int64_t>(errors.value()), 0);
    EXPECT_NE(doc.find(ids::metric(run.run_id(), Context::system(), "energy_joules")), nullptr);
}

TEST_F(TrackerTest, BuiltinCollectorsReport)
{
    WallClockCollector wall;
    ProcessCpuCollector cpu;
    ResidentMemoryCollector memory;
    EXPECT_EQ(wall.sample().at(0).metric, "wall_clock_s");
    EXPECT_GE(cpu.sample().at(0).value, 0.0);
    EXPECT_GT(memory.sample().at(0).value, 0.0);
}

TEST_F(TrackerTest, FlushedChunksSurviveAbandonedRun)
{
    auto options = fixed_options("crash");
    options.store.chunk_size = 64;
    fs::path store;
    {
        auto run = start_run(experiment(), options);
        store = run.run_dir() / "metrics.ypms";
        for (std::uint64_t step = 0; step < 200; ++step) {
            run.log_metric("loss", static_cast<double>(step), Context::training(), step);
        }
    }
    EXPECT_FALSE(fs::exists(store.parent_path() / "provenance.json"));
    EXPECT_EQ(code_of([&] { (void)StoreReader::open(store); }), ErrorCode::CorruptFile);
    const auto recovered = recover_chunks(store);
    ASSERT_EQ(recovered.size(), 1u);
    const auto& samples = recovered.begin()->second;
    ASSERT_EQ(samples.size(), 192u);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        EXPECT_EQ(samples[i].step, i);
        EXPECT_EQ(samples[i].value, static_cast<double>(i));
    }
}

TEST_F(TrackerTest, ConcurrentLogging)
{
    auto run = start_run(experiment(), fixed_options());
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&run, t, dir = dir_.path()] {
            const Context context("worker" + std::to_string(t));
            for (std::uint64_t step = 0; step < 2000; ++step) {
                run.log_metric("loss", static_cast<double>(step), context, step);
            }
            run.log_param("seed", AttributeValue::integer(t), context);
            run.log_artifact(write_blob(dir / ("w" + std::to_string(t)), std::to_string(t)));
        });
    }
    for (auto& thread : threads) {
        thread.join();
    }
    const auto artifacts = run.end_run();
    const auto doc = load(artifacts);
    auto counts = count_types(doc);
    EXPECT_EQ(counts[std::string(types::kParameter)], 4u);
    EXPECT_EQ(counts[std::string(types::kMetricSeries)], 4u);
    EXPECT_EQ(counts[std::string(types::kArtifact)], 4u);
    for (int t = 0; t < 4; ++t) {
        const auto samples = read_series(artifacts.store_path, "loss", "WORKER" + std::to_string(t));
        ASSERT_EQ(samples.size(), 2000u);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            ASSERT_EQ(samples[i].step, i);
        }
    }
}

TEST_F(TrackerTest, RootOverrideFromEnvironment)
{
    TempDir other;
    ::setenv(std::string(kRootEnvVar).c_str(), other.path().c_str(), 1);
    EXPECT_EQ(effective_root(experiment()), other.path());
    auto run = start_run(experiment(), fixed_options());
    EXPECT_EQ(run.run_dir(), other.path() / "mnist" / "0000");
    EXPECT_FALSE(fs::exists(dir_.path() / "mnist"));
}

TEST_F(TrackerTest, PinnedClockGivesByteIdenticalOutput)
{
    std::vector<std::string> outputs;
    for (int i = 0; i < 2; ++i) {
        TempDir root;
        auto run = start_run({"det", root.path()}, fixed_options("r1"));
        run.log_param("lr", AttributeValue::real(0.01), Context::training(), Direction::Input);
        for (std::uint64_t step = 0; step < 50; ++step) {
            run.log_metric("loss", 1.0 / static_cast<double>(step + 1), Context::training(), step, 0);
        }
        run.log_artifact(write_blob(root / "model.bin", "m"));
        const auto artifacts = run.end_run();
        outputs.push_back(read_file(artifacts.prov_json_path));
        outputs.push_back(read_file(artifacts.store_path));
    }
    EXPECT_EQ(outputs[0], outputs[2]);
    EXPECT_EQ(outputs[1], outputs[3]);
    EXPECT_EQ(outputs[0], canonicalize(outputs[0]));
}
