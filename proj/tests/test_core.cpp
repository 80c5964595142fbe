#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <sstream>

#include "oos/csv.hpp"
#include "oos/dataset.hpp"
#include "oos/loss.hpp"

using Catch::Approx;
using namespace oos;

namespace {

MultiSourceDataset make_dataset(std::vector<std::pair<SourceLabel, double>> records) {
    return dataset_from_records(records);
}

}  // namespace

TEST_CASE("dataset_from_records groups by label in canonical order") {
    const auto ds = make_dataset({{"a", 0.0}, {"a", 2.0}, {"b", 1.0}, {"b", 3.0}});
    REQUIRE(ds.source_count() == 2);
    REQUIRE(ds.total_size() == 4);
    CHECK(ds.label(0) == "a");
    CHECK(ds.label(1) == "b");
    CHECK(ds.source_size(0) == 2);
    CHECK(ds.source_size(1) == 2);

    // canonical order is lexicographic regardless of arrival order
    const auto ds2 = make_dataset({{"zebra", 1.0}, {"apple", 2.0}, {"mid", 3.0}, {"apple", 4.0}});
    CHECK(ds2.label(0) == "apple");
    CHECK(ds2.label(1) == "mid");
    CHECK(ds2.label(2) == "zebra");
    // within-source input order preserved
    CHECK(ds2.observations(0)[0] == 2.0);
    CHECK(ds2.observations(0)[1] == 4.0);
}

TEST_CASE("dataset_from_records rejects bad input") {
    CHECK_THROWS_AS(make_dataset({}), EmptyInputError);
    CHECK_THROWS_AS(make_dataset({{"a", 1.0}}), SingleSourceError);
    CHECK_THROWS_AS(make_dataset({{"a", 1.0}, {"a", 2.0}}), SingleSourceError);
    CHECK_THROWS_AS(make_dataset({{"a", 1.0}, {"b", std::nan("")}}), NonFiniteValueError);
    CHECK_THROWS_AS(make_dataset({{"a", 1.0}, {"b", INFINITY}}), NonFiniteValueError);
}

TEST_CASE("dataset sized like the benchmark sampler output") {
    // 600 records over 3 labels with shares (0.2, 0.3, 0.5)
    std::vector<std::pair<SourceLabel, double>> records;
    for (int i = 0; i < 120; ++i) records.push_back({"s1", 0.1 * i});
    for (int i = 0; i < 180; ++i) records.push_back({"s2", 0.2 * i});
    for (int i = 0; i < 300; ++i) records.push_back({"s3", 0.3 * i});
    const auto ds = dataset_from_records(records);
    REQUIRE(ds.source_count() == 3);
    CHECK(ds.total_size() == 600);
    CHECK(ds.source_size(0) == 120);
    CHECK(ds.source_size(1) == 180);
    CHECK(ds.source_size(2) == 300);
}

TEST_CASE("proportions and odds") {
    SECTION("balanced two sources") {
        const auto ds = make_dataset({{"a", 0.0}, {"a", 2.0}, {"b", 1.0}, {"b", 3.0}});
        const auto prop = proportions(ds);
        CHECK(prop.p[0] == Approx(0.5));
        CHECK(prop.od[0] == Approx(1.0));
        CHECK(prop.od[1] == Approx(1.0));
    }
    SECTION("benchmark shares") {
        const std::vector<std::size_t> counts{20, 30, 50};
        const auto prop = Proportions::from_counts(counts);
        CHECK(prop.p[0] == Approx(0.2));
        CHECK(prop.p[1] == Approx(0.3));
        CHECK(prop.p[2] == Approx(0.5));
        CHECK(prop.od[0] == Approx(0.25));
        CHECK(prop.od[1] == Approx(3.0 / 7.0));
        CHECK(prop.od[2] == Approx(1.0));
    }
    SECTION("very unbalanced") {
        const std::vector<std::size_t> counts{1, 99};
        const auto prop = Proportions::from_counts(counts);
        CHECK(prop.p[0] == Approx(0.01));
        CHECK(prop.od[0] == Approx(1.0 / 99.0));
        CHECK(prop.od[1] == Approx(99.0));
    }
    SECTION("shares sum to one and odds increase with p") {
        std::mt19937_64 engine(11);
        std::uniform_int_distribution<std::size_t> size(1, 500);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<std::size_t> counts(4);
            for (auto& c : counts) c = size(engine);
            const auto prop = Proportions::from_counts(counts);
            double sum = 0.0;
            for (double p : prop.p) sum += p;
            CHECK(sum == Approx(1.0).margin(1e-12));
            for (std::size_t a = 0; a < 4; ++a)
                for (std::size_t b = 0; b < 4; ++b)
                    if (prop.p[a] < prop.p[b]) CHECK(prop.od[a] < prop.od[b]);
        }
    }
    SECTION("invalid shares rejected") {
        CHECK_THROWS_AS(Proportions::from_probabilities({0.5, 0.6}), InvalidProportionsError);
        CHECK_THROWS_AS(Proportions::from_probabilities({1.0}), InvalidProportionsError);
        CHECK_THROWS_AS(Proportions::from_probabilities({0.3, 0.3, 0.3}), InvalidProportionsError);
    }
}

TEST_CASE("mean rule") {
    const MeanRule mean;
    CHECK(fit_rule(mean, std::vector<double>{1.0, 3.0}) == 2.0);
    CHECK(fit_rule(mean, std::vector<double>{5.0}) == 5.0);
    CHECK(fit_rule(mean, std::vector<double>{0.0, 2.0, 4.0}) == 2.0);
    CHECK_THROWS_AS(fit_rule(mean, std::vector<double>{}), EmptySampleError);

    SECTION("bit-identical under permutation") {
        std::mt19937_64 engine(5);
        std::normal_distribution<double> normal(0.0, 3.0);
        std::vector<double> sample(37);
        for (auto& x : sample) x = normal(engine);
        const double reference = fit_rule(mean, sample);
        for (int trial = 0; trial < 20; ++trial) {
            std::shuffle(sample.begin(), sample.end(), engine);
            CHECK(fit_rule(mean, sample) == reference);
        }
    }
}

TEST_CASE("loss functions") {
    const SquaredLoss sq;
    const AbsoluteLoss ab;
    SECTION("nonnegative on random pairs") {
        std::mt19937_64 engine(17);
        std::normal_distribution<double> normal(0.0, 10.0);
        for (int i = 0; i < 1000; ++i) {
            const double z = normal(engine), d = normal(engine);
            CHECK(sq(z, d) >= 0.0);
            CHECK(ab(z, d) >= 0.0);
        }
    }
    SECTION("squared loss is symmetric") {
        std::mt19937_64 engine(19);
        std::normal_distribution<double> normal(0.0, 4.0);
        for (int i = 0; i < 200; ++i) {
            const double z = normal(engine), d = normal(engine);
            CHECK(sq(z, d) == sq(d, z));
        }
    }
    SECTION("absolute loss satisfies the triangle bound in the decision") {
        std::mt19937_64 engine(23);
        std::normal_distribution<double> normal(0.0, 4.0);
        for (int i = 0; i < 200; ++i) {
            const double z = normal(engine), d = normal(engine), d2 = normal(engine);
            CHECK(std::abs(ab(z, d) - ab(z, d2)) <= std::abs(d - d2) + 1e-12);
        }
    }
}

TEST_CASE("CSV ingestion") {
    SECTION("well-formed file") {
        std::istringstream in("source,value\na,0\na,2\nb,1\nb,3\n");
        const auto ds = read_dataset_csv(in);
        REQUIRE(ds.source_count() == 2);
        CHECK(ds.observations(0)[1] == 2.0);
    }
    SECTION("header required") {
        std::istringstream in("src,val\na,0\nb,1\n");
        CHECK_THROWS_AS(read_dataset_csv(in), CsvFormatError);
    }
    SECTION("bad value reports the line number") {
        std::istringstream in("source,value\na,0\nb,oops\n");
        try {
            read_dataset_csv(in);
            FAIL("expected CsvFormatError");
        } catch (const CsvFormatError& e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
    }
    SECTION("missing field reports the line number") {
        std::istringstream in("source,value\na,0\njustalabel\n");
        try {
            read_dataset_csv(in);
            FAIL("expected CsvFormatError");
        } catch (const CsvFormatError& e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
    }
    SECTION("single-source CSV hits the dataset invariant") {
        std::istringstream in("source,value\na,0\na,1\n");
        CHECK_THROWS_AS(read_dataset_csv(in), SingleSourceError);
    }
    SECTION("empty body") {
        std::istringstream in("source,value\n");
        CHECK_THROWS_AS(read_dataset_csv(in), EmptyInputError);
    }
    SECTION("nan value is a domain error, not a format error") {
        std::istringstream in("source,value\na,0\nb,nan\n");
        CHECK_THROWS_AS(read_dataset_csv(in), NonFiniteValueError);
    }
}
