#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "robustreg/datagen.hpp"
#include "robustreg/io.hpp"

using namespace robustreg;

namespace {
LabeledDataset small_dataset() {
    ProblemDims dims = ProblemDims::create(30, 3, 5, 0.2, 0.1);
    DistributionSpec dist;
    dist.sigma_matrix = Mat::Identity(3, 3);
    Vec b(3);
    b << 1.0, 0.0, -1.0;
    LabeledDataset clean = generate_clean(dims, dist, b, 21);
    return contaminate(clean, ContaminationStrategy::parse("cluster_at_point", 50.0), dims.o, 21);
}
}  // namespace

TEST_CASE("csv round trip preserves values and the mask") {
    LabeledDataset data = small_dataset();
    std::string path = "/tmp/rr_test_dataset.csv";
    write_dataset_csv(path, data);

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "y,x_1,x_2,x_3,corrupted");

    LabeledDataset back = read_dataset_csv(path);
    CHECK(back.rows() == data.rows());
    CHECK((back.y - data.y).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((back.X - data.X).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(back.corrupted_count() == data.corrupted_count());
    std::remove(path.c_str());
}

TEST_CASE("binary round trip carries the ground truth") {
    LabeledDataset data = small_dataset();
    std::string path = "/tmp/rr_test_dataset.bin";
    write_dataset_binary(path, data);
    LabeledDataset back = read_dataset_binary(path);
    CHECK((back.y - data.y).norm() == 0.0);
    CHECK((back.X - data.X).norm() == 0.0);
    REQUIRE(back.b_star.has_value());
    CHECK((*back.b_star - *data.b_star).norm() == 0.0);
    CHECK(back.corrupted_count() == data.corrupted_count());

    // Corrupt the magic and expect a parse failure.
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_AS(read_dataset_binary(path), ConfigError);
    std::remove(path.c_str());
}

TEST_CASE("weight-update trace dump") {
    Mat Z(6, 2);
    Z.setRandom();
    Z.array() += 2.0;
    MwParams mp;
    mp.k = 1.0;
    mp.k_prime = 1.0;
    mp.radius = 1.0;
    mp.margin_lb = 0.5;
    mp.samples = 4;
    mp.record_history = true;
    MwTrace trace = mw_iterate(Z, mp, Rng(4));
    std::string path = "/tmp/rr_test_trace.csv";
    write_mw_trace(path, trace);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,margin_proxy,weight_entropy");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == trace.rounds);
    std::remove(path.c_str());

    MwParams no_hist = mp;
    no_hist.record_history = false;
    MwTrace bare = mw_iterate(Z, no_hist, Rng(4));
    CHECK_THROWS_AS(write_mw_trace(path, bare), ConfigError);
}

TEST_CASE("key-value config parsing") {
    KeyValueConfig kv = KeyValueConfig::parse_text(
        "# comment\n"
        "dims.n = 200\n"
        "dims.p = 3\n"
        "dims.K = 10\n"
        "dims.eps = 0.05\n"
        "dist.sigma_diag = 2, 1, 1\n"
        "rng.seed = 42\n");
    CHECK(kv.get_int("dims.n") == 200);
    CHECK(kv.get_double("dims.eps") == 0.05);
    CHECK(kv.get_u64_or("rng.seed", 0) == 42);
    CHECK(kv.get_list_or("dist.sigma_diag", {}).size() == 3);
    CHECK(kv.get_or("missing", "fallback") == "fallback");
    CHECK_THROWS_AS(kv.get("missing"), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse_text("not a pair\n"), ConfigError);

    SUBCASE("hash is order independent but content sensitive") {
        KeyValueConfig a = KeyValueConfig::parse_text("x = 1\ny = 2\n");
        KeyValueConfig b = KeyValueConfig::parse_text("y = 2\nx = 1\n");
        KeyValueConfig c = KeyValueConfig::parse_text("y = 2\nx = 3\n");
        CHECK(a.content_hash() == b.content_hash());
        CHECK(a.content_hash() != c.content_hash());
    }
}

TEST_CASE("experiment config resolves dims, laws and profile") {
    KeyValueConfig kv = KeyValueConfig::parse_text(
        "dims.n = 200\n"
        "dims.p = 3\n"
        "dims.K = 10\n"
        "dims.eta = 0.2\n"
        "dims.eps = 0.05\n"
        "consts.profile = practical\n"
        "dist.sigma_diag = 2, 1, 1\n"
        "attack.kind = cluster_at_point\n"
        "attack.magnitude = 25\n"
        "rng.seed = 11\n");
    ExperimentConfig cf = ExperimentConfig::from_kv(kv);
    CHECK(cf.dims.o == 10);
    CHECK(cf.consts.name == "practical");
    CHECK(cf.spectral.sigma_op == doctest::Approx(2.0));
    CHECK(cf.spectral.mu2_B2 == doctest::Approx(1.0));
    CHECK(cf.attack.magnitude == 25.0);
    CHECK(cf.b_star.size() == 3);
    CHECK(cf.b_star.norm() == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(ExperimentConfig::from_kv(KeyValueConfig::parse_text("dims.n = 10\n")), ConfigError);
}
