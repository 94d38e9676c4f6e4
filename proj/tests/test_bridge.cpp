#include <atomic>
#include <thread>

#include "catch2/catch_amalgamated.hpp"
#include "resin/bridge.hpp"
#include "resin/engine.hpp"
#include "resin/parser.hpp"
#include "resin/typecheck.hpp"

using namespace resin;

namespace {

GroundProgram ground_text(const std::string& text, const std::string& target) {
    return ground(typecheck(parse(text, "test.resin"), "test.resin"), target);
}

const char* kThreeSourceProgram =
    "a <- source(\"/a\", Probability).\n"
    "b <- source(\"/b\", Probability).\n"
    "c <- source(\"/c\", Probability).\n"
    "d if a and b and not c.\n"
    "d if not a and b and c.\n"
    "d -> target(\"/d\").\n";

} // namespace

TEST_CASE("wire lines round-trip every signal type") {
    const BusMessage cases[] = {
        {"/b", TypedValue::boolean(true), 1.0},
        {"/n", TypedValue::number(-17.25), 2.5},
        {"/p", TypedValue::probability(0.3), 3.0},
        {"/d", TypedValue::density(30.0, 5.0), 4.0},
    };
    for (const BusMessage& msg : cases) {
        const auto back = from_wire(to_wire(msg));
        REQUIRE(back.has_value());
        CHECK(back->channel == msg.channel);
        CHECK(back->value.type == msg.value.type);
        CHECK(back->value.value == msg.value.value);
        CHECK(back->value.mean == msg.value.mean);
        CHECK(back->value.stddev == msg.value.stddev);
        CHECK(back->timestamp == msg.timestamp);
    }
}

TEST_CASE("malformed wire lines fail with a reason") {
    const std::pair<const char*, const char*> cases[] = {
        {"not json at all", "malformed JSON"},
        {"[1,2,3]", "malformed JSON"},
        {R"({"type":"number","value":1,"timestamp":0})", "channel"},
        {R"({"channel":"/a","value":1,"timestamp":0})", "type"},
        {R"({"channel":"/a","type":"number","value":1})", "timestamp"},
        {R"({"channel":"/a","type":"boolean","value":1,"timestamp":0})", "true/false"},
        {R"({"channel":"/a","type":"number","timestamp":0})", "numeric value"},
        {R"({"channel":"/a","type":"probability","value":"x","timestamp":0})", "numeric value"},
        {R"({"channel":"/a","type":"probability","value":1.5,"timestamp":0})", "outside [0, 1]"},
        {R"({"channel":"/a","type":"density","mean":1,"timestamp":0})", "stddev"},
        {R"({"channel":"/a","type":"density","mean":1,"stddev":-2,"timestamp":0})", "positive"},
        {R"({"channel":"/a","type":"velocity","value":1,"timestamp":0})", "unknown type"},
    };
    for (const auto& [line, expect] : cases) {
        std::string why;
        CHECK_FALSE(from_wire(line, &why).has_value());
        INFO(line << " -> " << why);
        CHECK(why.find(expect) != std::string::npos);
    }
}

TEST_CASE("tcp clients drive an engine and hear its target") {
    Bus bus;
    Engine<> eng(ground_text(kThreeSourceProgram, "d"));
    EngineRunner<> runner(eng, bus);

    BridgeServer server(bus);
    const int port = server.listen_tcp("127.0.0.1", 0);
    REQUIRE(port > 0);
    server.start();

    std::atomic<bool> done{false};
    std::thread pump([&] {
        while (!done) runner.pump(0.01);
    });

    auto listener = BridgeClient::connect_tcp("127.0.0.1", port);
    listener.subscribe("/d");
    listener.subscribe("/echo");
    // Echo through the bus to prove both subscribes are fully processed
    // before the producer starts.
    listener.send({"/echo", TypedValue::number(42.0), 0.0});
    const auto echo = listener.recv(5.0);
    REQUIRE(echo.has_value());
    CHECK(echo->channel == "/echo");
    CHECK(echo->value.value == 42.0);

    auto producer = BridgeClient::connect_tcp("127.0.0.1", port);
    producer.send({"/a", TypedValue::probability(0.5), 0.1});
    producer.send({"/b", TypedValue::probability(0.4), 0.2});
    producer.send({"/c", TypedValue::probability(0.2), 0.3});

    const auto out = listener.recv(5.0);
    REQUIRE(out.has_value());
    CHECK(out->channel == "/d");
    CHECK(out->value.type == SignalType::Probability);
    CHECK(out->value.value == Catch::Approx(0.20).margin(1e-12));

    // Garbage and domain violations earn error lines, not silence.
    producer.send_line("this is not a message");
    auto err = producer.recv_line(5.0);
    REQUIRE(err.has_value());
    CHECK(err->find("error") != std::string::npos);

    producer.send({"/a", TypedValue::number(7.0), 0.4}); // declared Probability
    err = producer.recv_line(5.0);
    REQUIRE(err.has_value());
    CHECK(err->find("expects Probability") != std::string::npos);

    CHECK(server.clients_served() == 2);
    CHECK(server.wire_errors() >= 2);

    done = true;
    pump.join();
    listener.close();
    producer.close();
    server.stop();
    CHECK(eng.publications() == 1);
}

TEST_CASE("unix-domain sockets speak the same protocol") {
    const std::string path = "/tmp/resin_bridge_test.sock";
    Bus bus;
    BridgeServer server(bus);
    server.listen_unix(path);
    server.start();

    auto sink = BridgeClient::connect_unix(path);
    sink.subscribe("/x");
    sink.send({"/x", TypedValue::density(12.0, 2.0), 9.0});
    const auto got = sink.recv(5.0);
    REQUIRE(got.has_value());
    CHECK(got->value.type == SignalType::Density);
    CHECK(got->value.mean == 12.0);
    CHECK(got->value.stddev == 2.0);
    CHECK(got->timestamp == 9.0);

    sink.close();
    server.stop();
    CHECK_THROWS_AS(BridgeClient::connect_unix(path), ConfigError); // unlinked
}
