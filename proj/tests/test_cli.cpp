#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "ped/io.hpp"
#include "ped/serialize.hpp"

using namespace ped;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result ped_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "ped");
    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("ped_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string &name) const { return (path / name).string(); }
};

std::vector<std::vector<std::string>> parse_csv(const std::string &text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"')
                field += text[++i];
            else if (c == '"')
                quoted = false;
            else
                field += c;
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(field);
            field.clear();
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            row.push_back(field);
            rows.push_back(row);
            row.clear();
            field.clear();
            ++i;
        } else {
            field += c;
        }
    }
    REQUIRE(field.empty());
    REQUIRE(row.empty());
    return rows;
}

const std::vector<std::string> kSmallToy{"--samples", "300", "--epochs", "8", "--width", "8"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string> &b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

} // namespace

TEST_CASE("estat") {
    TempDir dir;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int u = 0; u < 3; ++u) {
        MatrixXd m(6, 2);
        for (Eigen::Index k = 0; k < m.size(); ++k)
            m.data()[k] = g(rng) + (k % 2) * u;
        io::write_feature_dump(dir / ("u" + std::to_string(u) + ".pedf"), FeatureMatrix(m));
    }
    io::write_feature_dump(dir / "short.pedf", FeatureMatrix(MatrixXd::Zero(5, 2)));
    io::write_labels(dir / "y.pedl", io::make_labels({1, 2, 1, 2, 1, 2}));
    io::write_labels(dir / "single.pedl", io::make_labels({1, 2, 1, 2, 1, 3}));

    const auto r = ped_cli({"estat", dir / "u0.pedf", dir / "u1.pedf", dir / "u2.pedf", "--labels", dir / "y.pedl"});
    REQUIRE(r.code == 0);
    const auto profile = json::profile_from_json(json::parse(r.out, "stdout"));
    CHECK(profile.size() == 3);
    CHECK(json::parse(r.out, "stdout")["config"]["seed"] == 0);

    const auto mismatch = ped_cli({"estat", dir / "u0.pedf", dir / "short.pedf", "--labels", dir / "y.pedl"});
    CHECK(mismatch.code == 2);
    CHECK(mismatch.out.empty());
    CHECK(mismatch.err.find("LengthMismatch") != std::string::npos);
    CHECK(mismatch.err.find("short.pedf") != std::string::npos);

    const auto u = ped_cli({"estat", dir / "u0.pedf", "--labels", dir / "single.pedl", "--variant", "u"});
    CHECK(u.code == 2);
    CHECK(u.err.find("TooFewSamples") != std::string::npos);

    const auto missing = ped_cli({"estat", dir / "nope.pedf", "--labels", dir / "y.pedl"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("nope.pedf") != std::string::npos);

    CHECK(ped_cli({"estat", dir / "u0.pedf"}).code == 2);
    CHECK(ped_cli({"estat", dir / "u0.pedf", "--labels", dir / "y.pedl", "--variant", "w"}).code == 2);
}

TEST_CASE("select") {
    TempDir dir;
    io::write_text(dir / "p.json", R"({"units":[{"index":0,"dependence":0.9},{"index":1,"dependence":0.88},)"
                                   R"({"index":2,"dependence":0.1}],"variant":"v","n_used":10,"seed":0})");
    auto alphas = [](const std::string &out) { return json::policy_from_json(json::parse(out, "stdout")).alphas; };

    const auto ch = ped_cli({"select", "--profile", dir / "p.json", "--k", "2", "--strategy", "cluster-head"});
    REQUIRE(ch.code == 0);
    CHECK(alphas(ch.out) == std::vector<std::uint8_t>{1, 0, 1});
    const auto top = ped_cli({"select", "--profile", dir / "p.json", "--k", "2", "--strategy", "top-k"});
    CHECK(alphas(top.out) == std::vector<std::uint8_t>{1, 1, 0});

    const auto too_many = ped_cli({"select", "--profile", dir / "p.json", "--k", "5"});
    CHECK(too_many.code == 2);
    CHECK(too_many.err.find("BadK") != std::string::npos);

    const auto all = ped_cli({"select", "--profile", dir / "p.json", "--k", "3"});
    CHECK(all.code == 0);
    CHECK(all.err.find("warning") != std::string::npos);
    CHECK(alphas(all.out) == std::vector<std::uint8_t>{1, 1, 1});

    io::write_text(dir / "bad.json", R"({"units":[{"index":0,"dependence":0.9},{"index":1}]})");
    const auto bad = ped_cli({"select", "--profile", dir / "bad.json", "--k", "1"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("units[1].dependence") != std::string::npos);

    const auto written = ped_cli({"select", "--profile", dir / "p.json", "--k", "2", "--out", dir / "pol.json"});
    CHECK(written.code == 0);
    CHECK(written.out.empty());
    const auto bytes = io::read_file(dir / "pol.json");
    CHECK(json::policy_from_json(json::parse(std::string(bytes.begin(), bytes.end()), "pol.json")).active_set().size() ==
          2);
}

TEST_CASE("toynet ped-run") {
    TempDir dir;
    const auto r = ped_cli(with({"toynet", "ped-run", "--units", "8", "--stages", "4", "--strategy", "cluster-head",
                                 "--seed", "7", "--csv", dir / "run.csv"},
                                kSmallToy));
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out, "stdout");
    REQUIRE(j["reports"].size() == 4);
    std::vector<std::size_t> active;
    for (const auto &rep : j["reports"])
        active.push_back(rep["policy"]["active_set"].size());
    CHECK(active == std::vector<std::size_t>{7, 6, 5, 4});
    CHECK(j["config"]["seed"] == 7);
    CHECK(!j["reports"][0].contains("wall_time"));

    const auto b = io::read_file(dir / "run.csv");
    const auto rows = parse_csv(std::string(b.begin(), b.end()));
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"stage", "params", "flops", "accuracy"});

    CHECK(ped_cli(with({"toynet", "ped-run", "--units", "3", "--stages", "3"}, kSmallToy)).code == 2);
    CHECK(ped_cli(with({"toynet", "ped-run", "--units", "4", "--stages", "2", "--k-sequence", "3"}, kSmallToy)).code ==
          2);
    CHECK(ped_cli(with({"toynet", "ped-run", "--units", "4", "--strategy", "largest"}, kSmallToy)).code == 2);

    const auto diverged = ped_cli(with({"toynet", "ped-run", "--units", "2", "--stages", "1", "--lr", "1e300"}, kSmallToy));
    CHECK(diverged.code == 3);
    CHECK(diverged.err.find("DivergedLoss") != std::string::npos);
}

TEST_CASE("config files fill in options the command line leaves unset") {
    TempDir dir;
    io::write_text(dir / "cfg.json", R"({"units": 4, "stages": 2, "batch_size": 16, "samples": 300, "epochs": 4,
                                        "k-sequence": [3, 1]})");
    const auto r = ped_cli({"toynet", "ped-run", "--config", dir / "cfg.json", "--stages", "1"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out, "stdout");
    CHECK(j["config"]["units"] == 4);
    CHECK(j["config"]["batch-size"] == 16);
    CHECK(j["config"]["stages"] == 1);
    CHECK(j["config"]["k-sequence"] == json::Json::array({3, 1}));
    CHECK(j["reports"].size() == 1);

    // the echoed config is itself a valid config file
    io::write_text(dir / "echo.json", j["config"].dump());
    const auto again = ped_cli({"toynet", "ped-run", "--config", dir / "echo.json"});
    CHECK(again.out == r.out);
    CHECK(ped_cli({"--config", dir / "echo.json", "toynet", "ped-run"}).out == r.out);

    io::write_text(dir / "typo.json", R"({"unitz": 4})");
    const auto typo = ped_cli({"toynet", "ped-run", "--config", dir / "typo.json"});
    CHECK(typo.code == 2);
    CHECK(typo.err.find("unitz") != std::string::npos);
    io::write_text(dir / "broken.json", "{");
    CHECK(ped_cli({"toynet", "ped-run", "--config", dir / "broken.json"}).code == 2);
    CHECK(ped_cli({"toynet", "ped-run", "--config", dir / "absent.json"}).code == 2);
}

TEST_CASE("toynet grad-check and gen-data") {
    const auto gc = ped_cli({"toynet", "grad-check", "--composition", "dense", "--prune", "1"});
    CHECK(gc.code == 0);
    const auto j = json::parse(gc.out, "stdout");
    CHECK(j["max_rel_error"].get<double>() < 1e-4);
    CHECK(j["pruned_max_abs_analytic"].get<double>() == 0.0);

    TempDir dir;
    const auto gen = ped_cli({"toynet", "gen-data", "--kind", "blobs", "--n", "100", "--p", "4", "--features",
                              dir / "x.pedf", "--labels", dir / "y.pedl"});
    REQUIRE(gen.code == 0);
    const auto y = io::load_labels(dir / "y.pedl");
    std::vector<int> count(5, 0);
    for (int l : y.labels)
        ++count[static_cast<std::size_t>(l)];
    CHECK(count == std::vector<int>{0, 25, 25, 25, 25});
    CHECK(io::load_feature_dump(dir / "x.pedf").n() == 100);
    CHECK(ped_cli({"toynet", "gen-data", "--n", "3", "--p", "4", "--features", dir / "a", "--labels", dir / "b"})
              .code == 2);
}

TEST_CASE("offline loop through dumps, profiles and policies") {
    TempDir dir;
    const std::vector<std::string> net{"--units", "4", "--seed", "3"};
    REQUIRE(ped_cli(with(with({"toynet", "train", "--checkpoint", dir / "c0.pedn", "--dump-dir", dir / "d0"}, net),
                         kSmallToy))
                .code == 0);
    std::vector<std::string> estat{"estat"};
    for (int l = 0; l < 4; ++l)
        estat.push_back(dir / ("d0/unit_0" + std::to_string(l) + ".pedf"));
    REQUIRE(ped_cli(with(estat, {"--labels", dir / "d0/labels.pedl", "--out", dir / "p0.json"})).code == 0);
    REQUIRE(ped_cli({"select", "--profile", dir / "p0.json", "--k", "2", "--out", dir / "s0.json"}).code == 0);

    const auto retrain = ped_cli(with(with({"toynet", "train", "--resume", dir / "c0.pedn", "--policy", dir / "s0.json",
                                            "--dump-dir", dir / "d1"},
                                           net),
                                      kSmallToy));
    REQUIRE(retrain.code == 0);
    const auto j = json::parse(retrain.out, "stdout");
    REQUIRE(j["dumps"].size() == 2);
    std::vector<std::string> estat1{"estat"};
    for (const auto &d : j["dumps"])
        estat1.push_back(d.get<std::string>());
    const auto p1 = ped_cli(with(estat1, {"--labels", dir / "d1/labels.pedl", "--policy", dir / "s0.json"}));
    REQUIRE(p1.code == 0);
    const auto profile = json::profile_from_json(json::parse(p1.out, "stdout"));
    CHECK(profile.indices == json::policy_from_json(j["policy"]).active_set());
    CHECK(profile.stage == 1);
    CHECK(profile.unit_count == 4);

    // a two-dump estat cannot speak for a policy with a different active count
    CHECK(ped_cli({"estat", estat1[1], "--labels", dir / "d1/labels.pedl", "--policy", dir / "s0.json"}).code == 2);
}

TEST_CASE("compare") {
    const auto r = ped_cli(with({"compare", "--units", "4", "--strategies", "cluster-head,random", "--seeds", "1,2,3",
                                 "--stages", "3"},
                                kSmallToy));
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 19);
    CHECK(rows[0] == std::vector<std::string>{"strategy", "seed", "stage", "remaining_params_pct",
                                              "remaining_flops_pct", "accuracy"});
    for (const auto &row : rows)
        CHECK(row.size() == 6);
    CHECK(r.err.find("\"seeds\":[1,2,3]") != std::string::npos);

    const auto again = ped_cli(with({"compare", "--units", "4", "--strategies", "cluster-head,random", "--seeds",
                                     "1,2,3", "--stages", "3"},
                                    kSmallToy));
    CHECK(again.out == r.out);
}

TEST_CASE("usage errors exit 2, help exits 0") {
    CHECK(ped_cli({}).code == 2);
    CHECK(ped_cli({"frobnicate"}).code == 2);
    CHECK(ped_cli({"toynet"}).code == 2);
    const auto help = ped_cli({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("estat") != std::string::npos);
}
