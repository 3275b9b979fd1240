#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "qpm/manifest.hpp"

using namespace qpm;

TEST_CASE("round trip preserves every field") {
    RunManifest m;
    m.command = "sweep";
    m.version = "qpstab 0.1.0";
    m.duration_s = 12.345678;
    m.args = {"sweep", "--n", "100", "--eps", "0.1", "--out-prefix", "run/chart"};
    m.outputs = {"run/chart.pgm", "run/chart.csv"};

    const RunManifest r = parse_manifest(serialize_manifest(m));
    CHECK(r.command == m.command);
    CHECK(r.version == m.version);
    CHECK(r.duration_s == Catch::Approx(m.duration_s).margin(1e-6));
    CHECK(r.args == m.args);
    CHECK(r.outputs == m.outputs);
}

TEST_CASE("serialized form is flat key=value text") {
    RunManifest m;
    m.command = "point";
    m.version = "qpstab 0.1.0";
    m.duration_s = 0.5;
    m.args = {"point", "--eps", "0"};
    CHECK(serialize_manifest(m) ==
          "command=point\n"
          "version=qpstab 0.1.0\n"
          "duration_s=0.500000\n"
          "arg0=point\n"
          "arg1=--eps\n"
          "arg2=0\n");
}

TEST_CASE("argument order follows numeric indices past ten entries") {
    RunManifest m;
    m.command = "x";
    for (int k = 0; k < 12; ++k) m.args.push_back("a" + std::to_string(k));
    const RunManifest r = parse_manifest(serialize_manifest(m));
    CHECK(r.args == m.args);  // arg10 must not sort before arg2
}

TEST_CASE("values may contain equals signs and spaces") {
    RunManifest m;
    m.command = "sweep";
    m.version = "qpstab 0.1.0";
    m.args = {"--region", "1:4:2=3"};
    m.outputs = {"out dir/chart.csv"};
    const RunManifest r = parse_manifest(serialize_manifest(m));
    CHECK(r.args == m.args);
    CHECK(r.outputs == m.outputs);
}

TEST_CASE("unknown keys are ignored, malformed lines are not") {
    const RunManifest r = parse_manifest("command=point\nfuture_field=anything\n");
    CHECK(r.command == "point");
    CHECK_THROWS_AS(parse_manifest("command=point\nno separator here\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_manifest("duration_s=fast\n"), std::invalid_argument);
}

TEST_CASE("file round trip") {
    RunManifest m;
    m.command = "transition";
    m.version = "qpstab 0.1.0";
    m.duration_s = 1.25;
    m.args = {"transition", "--eps", "0.1"};
    m.outputs = {"t.csv"};
    const std::string path = "manifest_roundtrip_test.manifest";
    write_manifest(path, m);
    const RunManifest r = read_manifest(path);
    CHECK(r.command == m.command);
    CHECK(r.args == m.args);
    CHECK(r.outputs == m.outputs);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_manifest("definitely_missing.manifest"), std::invalid_argument);
}
