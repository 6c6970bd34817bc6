#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <beamra/channel.hpp>
#include <beamra/rng.hpp>

using namespace beamra;

TEST_CASE("path loss follows the log-distance law") {
    const LinkParams p;
    CHECK(path_loss_db(p, 1.0) == 120.9);
    CHECK_THAT(path_loss_db(p, 10.0), Catch::Matchers::WithinAbs(158.5, 1e-12));
    CHECK_THAT(path_loss_db(p, 5.0), Catch::Matchers::WithinAbs(147.18127216303432, 1e-12));
    CHECK_THROWS_AS(path_loss_db(p, 0.0), std::domain_error);
    CHECK_THROWS_AS(path_loss_db(p, -1.0), std::domain_error);
}

TEST_CASE("received power composes the link budget") {
    const LinkParams p;  // 23 dBm + 0 dBi + 18 dBi
    const double boresight = received_power_dbm(p, 1.0, 1.0, 0.0);
    CHECK_THAT(boresight, Catch::Matchers::WithinAbs(-79.9, 1e-12));

    // half amplitude costs 20*log10(0.5) dB
    CHECK_THAT(received_power_dbm(p, 0.5, 1.0, 0.0),
               Catch::Matchers::WithinAbs(boresight + 20.0 * std::log10(0.5), 1e-12));

    // shadowing is additive
    CHECK_THAT(received_power_dbm(p, 1.0, 1.0, 8.0), Catch::Matchers::WithinAbs(boresight + 8.0, 1e-12));

    // zero gain yields the sentinel
    CHECK(received_power_dbm(p, 0.0, 1.0, 0.0) == neg_inf_dbm);
}

TEST_CASE("received power decreases with distance and in-lobe offset") {
    const LinkParams p;
    double prev = received_power_dbm(p, 1.0, 0.01, 0.0);
    for (double d = 0.02; d <= 10.0; d += 0.07) {
        const double now = received_power_dbm(p, 1.0, d, 0.0);
        CHECK(now < prev);
        prev = now;
    }
    const Beam beam{0.0, 2.0 * std::numbers::pi / 3.0};
    double prev_amp = received_power_dbm(p, beam, 0.25, 0.0, 1.0, 0.0);
    for (double off = 0.02; off < 0.6; off += 0.02) {  // inside the main lobe
        const double now = received_power_dbm(p, beam, 0.25, off, 1.0, 0.0);
        CHECK(now < prev_amp);
        prev_amp = now;
    }
}

TEST_CASE("interference aggregates powers in the linear domain") {
    CHECK(interference_power_dbm(std::vector<double>{-100.0}) == -100.0);
    CHECK_THAT(interference_power_dbm(std::vector<double>{-100.0, -100.0}),
               Catch::Matchers::WithinAbs(-100.0 + 10.0 * std::log10(2.0), 1e-12));
    CHECK(interference_power_dbm(std::vector<double>{}) == neg_inf_dbm);
    CHECK(interference_power_dbm(std::vector<double>{neg_inf_dbm, neg_inf_dbm}) == neg_inf_dbm);

    // n equal contributions add 10*log10(n)
    for (int n : {1, 2, 10, 37}) {
        std::vector<double> terms(static_cast<std::size_t>(n), -100.0);
        CHECK_THAT(interference_power_dbm(terms),
                   Catch::Matchers::WithinAbs(-100.0 + 10.0 * std::log10(n), 1e-9));
    }
}

TEST_CASE("interference is permutation invariant and monotone") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> terms;
        const int n = 1 + static_cast<int>(rng.uniform_below(8));
        for (int i = 0; i < n; ++i) terms.push_back(-140.0 + 80.0 * rng.uniform());

        const double base = interference_power_dbm(terms);
        std::vector<double> shuffled = terms;
        for (std::size_t i = shuffled.size(); i > 1; --i) {
            std::swap(shuffled[i - 1], shuffled[rng.uniform_below(i)]);
        }
        CHECK_THAT(interference_power_dbm(shuffled), Catch::Matchers::WithinAbs(base, 1e-12));

        terms.push_back(-120.0);
        CHECK(interference_power_dbm(terms) > base);
    }
}

TEST_CASE("decode compares the margin against the threshold") {
    CHECK(decode(-106.0, -108.0, -110.0));
    CHECK(decode(-106.0, neg_inf_dbm, -110.0));
    CHECK_FALSE(decode(-106.0, 10.0, -110.0));
}

TEST_CASE("decode is monotone in signal and interference") {
    Rng rng(23);
    for (int trial = 0; trial < 10000; ++trial) {
        const double r = -160.0 + 160.0 * rng.uniform();
        const double i = -160.0 + 160.0 * rng.uniform();
        const double gamma = -120.0 + 40.0 * rng.uniform();
        if (decode(r, i, gamma)) {
            const double up = 20.0 * rng.uniform();
            CHECK(decode(r + up, i, gamma));
            CHECK(decode(r, i - up, gamma));
        } else {
            const double down = 20.0 * rng.uniform();
            CHECK_FALSE(decode(r - down, i, gamma));
            CHECK_FALSE(decode(r, i + down, gamma));
        }
    }
}
