#include "doctest.h"

#include <stdexcept>

#include "keed/config.hpp"

using namespace keed;
using namespace keed::config;

TEST_CASE("config file parsing") {
    const ConfigFile file = ConfigFile::parse(
        "# comment\n"
        "[model]\n"
        "width = 24   ; trailing comment\n"
        "\n"
        "[decode]\n"
        "lambda = 0.55\n"
        "lambda.PPeak = 0.7\n");
    CHECK(*file.get("model.width") == "24");
    CHECK(*file.get("decode.lambda") == "0.55");
    CHECK(*file.get("decode.lambda.PPeak") == "0.7");
    CHECK_FALSE(file.get("model.depth").has_value());

    CHECK_THROWS(ConfigFile::parse("[model\nwidth = 3\n"));
    CHECK_THROWS(ConfigFile::parse("width\n"));
}

TEST_CASE("file values overlay the defaults") {
    RunConfig rc;
    CHECK(rc.model.width == 48);
    CHECK(rc.decode.lambda == doctest::Approx(0.4));

    rc.apply(ConfigFile::parse(
        "[model]\nwidth = 24\nblocks = 1\n"
        "[decode]\nlambda = 0.6\nlambda.TPeak = 0.2\n"
        "[qrs]\nband_high = 18\n"
        "[wt]\npresence_factor = 0.3\n"
        "[train]\nepochs = 3\n"
        "[run]\nseed = 77\n"
        "[annotations]\ncode.24 = PPeak\naux.t = TPeak\n"
        "[fetch:local]\nbase_url = http://127.0.0.1:9/x\nfiles = a.hea, a.dat\n"
        "sha256.a.hea = deadbeef\n"));
    CHECK(rc.model.width == 24);
    CHECK(rc.model.n_blocks == 1);
    CHECK(rc.model.depth == 4);  // untouched default
    CHECK(rc.decode.lambda == doctest::Approx(0.6));
    CHECK(*rc.decode.lambda_override[static_cast<int>(KeypointKind::TPeak)] ==
          doctest::Approx(0.2));
    CHECK(rc.qrs.band_high == doctest::Approx(18.0));
    CHECK(rc.wt.presence_factor == doctest::Approx(0.3));
    CHECK(rc.train_epochs == 3);
    CHECK(rc.seed == 77);
    CHECK(rc.ann_code_map.at(24) == KeypointKind::PPeak);
    CHECK(rc.ann_aux_map.at("t") == KeypointKind::TPeak);
    REQUIRE(rc.fetch_catalog.count("local") == 1);
    CHECK(rc.fetch_catalog["local"].files == std::vector<std::string>{"a.hea", "a.dat"});
    CHECK(rc.fetch_catalog["local"].sha256.at("a.hea") == "deadbeef");

    CHECK_THROWS(rc.apply(ConfigFile::parse("[model]\nwidth = abc\n")));
    CHECK_THROWS(rc.apply(ConfigFile::parse("[nope]\nkey = 1\n")));
}

TEST_CASE("dump emits parseable config that reproduces the values") {
    RunConfig rc;
    rc.model.width = 16;
    rc.decode.lambda = 0.25;
    rc.ann_code_map[24] = KeypointKind::PPeak;
    RunConfig back;
    back.apply(ConfigFile::parse(rc.dump()));
    CHECK(back.model.width == 16);
    CHECK(back.decode.lambda == doctest::Approx(0.25));
    CHECK(back.ann_code_map.at(24) == KeypointKind::PPeak);
}

TEST_CASE("built-in fetch catalog lists the evaluation datasets") {
    RunConfig rc;
    for (const char* id : {"qtdb", "pwave", "but-pdb", "mitdb"})
        CHECK(rc.fetch_catalog.count(id) == 1);
}
