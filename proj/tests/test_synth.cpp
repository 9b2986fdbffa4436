#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "covershape/dsp.hpp"
#include "covershape/synth.hpp"

using namespace covershape;

namespace {

SongSpec tiny_spec() {
    SongSpec spec;
    spec.name = "tiny";
    spec.tempo_bpm = 120.0;
    Section a;
    a.beats = 4;
    a.chord = {220.0, 330.0};
    a.rhythm = {1, 0, 1, 0};
    Section b = a;
    b.chord = {275.0};
    spec.sections = {a, b};
    return spec;
}

}  // namespace

TEST_CASE("click track geometry") {
    const AudioSignal clicks = synth_click_track(120.0, 10.0, 22050);
    CHECK(clicks.sample_rate == 22050);
    REQUIRE(clicks.samples.size() == 220500);

    int found = 0;
    for (std::int64_t k = 0;; ++k) {
        const auto at = std::int64_t(std::llround(double(k) * 0.5 * 22050.0));
        if (at >= clicks.samples.size()) break;
        CHECK(clicks.samples[at] == 0.9);
        if (k > 0) CHECK(clicks.samples[at - 1] == 0.0);
        ++found;
    }
    CHECK(found == 20);

    // silence between the 5 ms bursts
    CHECK(clicks.samples.segment(200, 10000).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_WITH_AS(synth_click_track(20.0, 1.0, 22050), "bpm outside [30, 300]",
                         std::invalid_argument);
    CHECK_THROWS_AS(synth_click_track(310.0, 1.0, 22050), std::invalid_argument);
    CHECK_THROWS_WITH_AS(synth_click_track(120.0, 0.0, 22050), "invalid geometry",
                         std::invalid_argument);
    CHECK_THROWS_AS(synth_click_track(120.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("rendering is deterministic in the seed") {
    const SongSpec spec = tiny_spec();
    const AudioSignal a = render_song(spec, 8000, 77);
    const AudioSignal b = render_song(spec, 8000, 77);
    CHECK(a.sample_rate == 8000);
    REQUIRE(a.samples.size() == b.samples.size());
    CHECK((a.samples - b.samples).cwiseAbs().maxCoeff() == 0.0);

    const AudioSignal c = render_song(spec, 8000, 78);
    CHECK((a.samples - c.samples).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("rendered length and level") {
    SongSpec spec = tiny_spec();
    spec.tempo_bpm = 92.0;
    spec.gain = 0.5;
    const AudioSignal sig = render_song(spec, 8000, 5);
    CHECK(sig.samples.size() ==
          std::int64_t(std::llround(spec.total_beats() * (60.0 / 92.0) * 8000.0)));
    CHECK(sig.samples.cwiseAbs().maxCoeff() ==
          doctest::Approx(0.9 * 0.5).epsilon(1e-12));
}

TEST_CASE("a pure chord puts its fundamental on top of the spectrum") {
    SongSpec spec;
    spec.name = "drone";
    spec.tempo_bpm = 120.0;
    Section s;
    s.beats = 8;
    s.chord = {220.0};
    s.rhythm = {0};
    spec.sections = {s, s};

    const AudioSignal sig = render_song(spec, 22050, 3);
    REQUIRE(sig.samples.size() > 9000);

    RealFft fft;
    const Eigen::VectorXd power = fft.power_spectrum(sig.samples.segment(500, 8192), 8192);
    Eigen::Index peak = 0;
    power.maxCoeff(&peak);
    const double freq = double(peak) * 22050.0 / 8192.0;
    CHECK(std::abs(freq - 220.0) <= 22050.0 / 8192.0);
}

TEST_CASE("spec validation") {
    SongSpec spec = tiny_spec();
    spec.tempo_bpm = 30.0;
    CHECK_THROWS_WITH_AS(render_song(spec, 8000, 1), "tempo out of range",
                         std::invalid_argument);

    spec = tiny_spec();
    spec.sections.resize(1);
    CHECK_THROWS_WITH_AS(render_song(spec, 8000, 1), "need at least 2 sections",
                         std::invalid_argument);

    spec = tiny_spec();
    spec.sections[1].beats = 0;
    CHECK_THROWS_WITH_AS(render_song(spec, 8000, 1), "section must span at least 1 beat",
                         std::invalid_argument);

    spec = tiny_spec();
    spec.sections[0].chord[0] = -5.0;
    CHECK_THROWS_WITH_AS(render_song(spec, 8000, 1), "fundamentals must be positive",
                         std::invalid_argument);
}

TEST_CASE("cover transform") {
    const SongSpec spec = tiny_spec();

    SUBCASE("identity transform changes nothing") {
        const SongSpec same = make_cover(spec, CoverTransform{});
        CHECK(spec_to_json_string(same) == spec_to_json_string(spec));
    }

    SUBCASE("default transform") {
        const SongSpec cover = make_cover(spec, default_cover_transform());
        CHECK(cover.tempo_bpm == doctest::Approx(150.0).epsilon(1e-12));
        CHECK(cover.timbre == Timbre::Sawtooth);
        CHECK(cover.gain == 0.5);
        REQUIRE(cover.sections.size() == spec.sections.size());
        const double ratio = std::pow(2.0, 3.0 / 12.0);
        for (size_t s = 0; s < cover.sections.size(); ++s)
            for (size_t f = 0; f < cover.sections[s].chord.size(); ++f)
                CHECK(cover.sections[s].chord[f] ==
                      doctest::Approx(spec.sections[s].chord[f] * ratio).epsilon(1e-12));
    }

    SUBCASE("intro beats prepend a clicks-only section") {
        CoverTransform t;
        t.prepend_intro_beats = 3;
        const SongSpec cover = make_cover(spec, t);
        REQUIRE(cover.sections.size() == spec.sections.size() + 1);
        CHECK(cover.sections[0].beats == 3);
        CHECK(cover.sections[0].chord.empty());
        CHECK(cover.sections[0].rhythm == std::vector<int>{1});
    }

    SUBCASE("transform cannot push the tempo out of range") {
        SongSpec fast = spec;
        fast.tempo_bpm = 200.0;
        CoverTransform t;
        t.tempo_factor = 1.25;
        CHECK_THROWS_WITH_AS(make_cover(fast, t), "tempo out of range",
                             std::invalid_argument);
    }
}

TEST_CASE("example corpus") {
    const auto corpus = example_corpus(10, 42);
    REQUIRE(corpus.size() == 10);

    std::vector<std::string> names;
    for (int i = 0; i < 10; ++i) {
        const SongSpec& s = corpus[size_t(i)];
        names.push_back(s.name);
        CHECK(s.tempo_bpm == 92.0 + 8.0 * i);
        CHECK(s.total_beats() == 24);
        CHECK(s.sections.size() >= 2);
        for (const auto& sec : s.sections) {
            CHECK(!sec.chord.empty());
            for (double f : sec.chord) CHECK(f > 0.0);
        }
        char want[16];
        std::snprintf(want, sizeof want, "song%02d", i);
        CHECK(s.name == want);
    }

    // stable across calls
    const auto again = example_corpus(10, 42);
    for (size_t i = 0; i < 10; ++i)
        CHECK(spec_to_json_string(again[i]) == spec_to_json_string(corpus[i]));

    CHECK_THROWS_WITH_AS(example_corpus(0, 1), "need at least one song",
                         std::invalid_argument);
}

TEST_CASE("spec json round trip") {
    SongSpec spec = tiny_spec();
    spec.tempo_bpm = 133.7;
    spec.gain = 0.8125;
    spec.timbre = Timbre::Square;
    const std::string text = spec_to_json_string(spec);
    const SongSpec back = spec_from_json_string(text);
    CHECK(spec_to_json_string(back) == text);
    CHECK(back.tempo_bpm == spec.tempo_bpm);
    CHECK(back.timbre == Timbre::Square);
    CHECK(back.sections[0].chord == spec.sections[0].chord);
}

TEST_CASE("timbre names") {
    for (Timbre t : {Timbre::Sine, Timbre::Sawtooth, Timbre::Square, Timbre::Noise})
        CHECK(timbre_from_name(timbre_name(t)) == t);
    CHECK_THROWS_WITH_AS(timbre_from_name("flute"), "unknown timbre: flute",
                         std::invalid_argument);
}
