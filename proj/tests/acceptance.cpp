// Acceptance suite. Each criterion prints exactly one PASS/FAIL line;
// the process exits nonzero if any of them fail. The canonical scenario
// file path comes in as argv[1].

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fieldsync/client.hpp"
#include "fieldsync/middleware.hpp"
#include "fieldsync/netsim.hpp"
#include "fieldsync/pipeline.hpp"
#include "fieldsync/queue.hpp"
#include "support/docgen.hpp"
#include "support/fakes.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace fieldsync;

namespace {

int g_failures = 0;

struct Criterion {
    const char* name;
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& why) {
        if (!cond && ok) {
            ok = false;
            detail = why;
        }
    }

    void finish(double seconds) {
        if (ok) {
            std::printf("[PASS] %s (%.2fs)\n", name, seconds);
        } else {
            std::printf("[FAIL] %s: %s\n", name, detail.c_str());
            ++g_failures;
        }
        std::fflush(stdout);
    }
};

template <typename F>
void run_criterion(const char* name, F&& body) {
    Criterion c{name, true, {}};
    auto started = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.require(false, std::string("exception: ") + e.what());
    }
    double seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    c.finish(seconds);
}

netsim::Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read scenario " + path);
    return netsim::scenario_from_json(nlohmann::json::parse(f));
}

// C1: process at defaults shrinks each corpus image below a third of the
// raw PPM payload, within the time budget.
void c1_size_reduction(Criterion& c) {
    auto started = std::chrono::steady_clock::now();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto doc = docgen::synthetic_document(seed);
        std::uint64_t raw_payload = doc.samples.size();  // PPM payload bytes
        auto out = imaging::process_document(doc, imaging::PipelineConfig{});
        c.require(out.bytes.size() < raw_payload / 3,
                  "seed " + std::to_string(seed) + ": container " +
                      std::to_string(out.bytes.size()) + " >= " +
                      std::to_string(raw_payload / 3));
    }
    double elapsed = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    c.require(elapsed < 10.0,
              "pipeline took " + std::to_string(elapsed) + "s, budget 10s");
}

// C2: sharpening strictly raises the mean boundary gradient on step
// edges, and the detector matches the naive oracle exactly on small
// images.
void c2_sharpness(Criterion& c) {
    for (int variant = 0; variant < 5; ++variant) {
        auto img = docgen::step_edge(variant);
        auto mask = imaging::detect_boundary(img, 1.0);
        c.require(mask.true_count() > 0,
                  "variant " + std::to_string(variant) + ": empty mask");
        auto sharp = imaging::sharpen_boundary(img, mask, 1.0);
        double before = oracles::mean_gradient_over(img, mask);
        double after = oracles::mean_gradient_over(sharp, mask);
        c.require(after > before,
                  "variant " + std::to_string(variant) + ": gradient " +
                      std::to_string(after) + " !> " + std::to_string(before));
    }

    SplitMix64 rng(1234);
    for (int trial = 0; trial < 300; ++trial) {
        std::uint32_t w = 3 + static_cast<std::uint32_t>(rng.below(6));
        std::uint32_t h = 3 + static_cast<std::uint32_t>(rng.below(6));
        auto img = imaging::make_image(w, h, 1);
        for (auto& s : img.samples) s = static_cast<std::uint8_t>(rng.below(256));
        double k = rng.uniform() * 2.0;
        auto got = imaging::detect_boundary(img, k);
        auto want = oracles::naive_sobel_mask(img, k);
        for (std::size_t i = 0; i < want.size(); ++i)
            c.require(got.bits[i] == want[i],
                      "oracle mismatch at trial " + std::to_string(trial));
    }
}

// C3: codec laws. decode(encode(x, q)) == quantize(x, q) on 1000 random
// images, losslessness at q = 1, and PSNR/size monotone in q on the
// corpus.
void c3_codec_laws(Criterion& c) {
    SplitMix64 rng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        std::uint32_t w = 1 + static_cast<std::uint32_t>(rng.below(10));
        std::uint32_t h = 1 + static_cast<std::uint32_t>(rng.below(10));
        auto img = imaging::make_image(w, h, 1);
        for (auto& s : img.samples) s = static_cast<std::uint8_t>(rng.below(256));
        double q = 0.02 + rng.uniform() * 0.98;
        auto doc = imaging::encode_fsq1(img, q);
        c.require(imaging::decode_fsq1(doc.bytes) == imaging::quantize(img, q),
                  "roundtrip mismatch at trial " + std::to_string(trial));
        if (trial % 10 == 0)
            c.require(imaging::decode_fsq1(
                          imaging::encode_fsq1(img, 1.0).bytes) == img,
                      "lossless failure at trial " + std::to_string(trial));
    }

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto doc = imaging::to_monochrome(docgen::synthetic_document(seed));
        double prev_psnr = -1;
        std::size_t prev_size = 0;
        for (int i = 1; i <= 10; ++i) {
            double q = i / 10.0;
            auto enc = imaging::encode_fsq1(doc, q);
            double p = imaging::psnr(imaging::decode_fsq1(enc.bytes), doc);
            if (std::isinf(p)) p = 1e12;
            c.require(p >= prev_psnr, "PSNR drop at seed " +
                                          std::to_string(seed) + " q " +
                                          std::to_string(q));
            c.require(enc.bytes.size() >= prev_size,
                      "size drop at seed " + std::to_string(seed) + " q " +
                          std::to_string(q));
            prev_psnr = p;
            prev_size = enc.bytes.size();
        }
    }
}

// C4: 1000 journaled events, a simulated crash at every entry boundary
// and torn mid-entry; recovery must agree with an independent replay.
void c4_queue_durability(Criterion& c) {
    auto started = std::chrono::steady_clock::now();
    support::TempDir master;
    struct Event {
        bool ack;
        std::string key;
    };
    std::vector<Event> events;
    {
        auto q = syncq::SyncQueue::open(master.path());
        SplitMix64 rng(77);
        std::vector<std::string> keys;
        int enqueued = 0;
        while (enqueued < 1000) {
            std::string payload = "item-" + std::to_string(enqueued);
            auto key = q.enqueue(syncq::ItemKind::RecordManifest,
                                 {payload.begin(), payload.end()});
            keys.push_back(key);
            events.push_back({false, key});
            ++enqueued;
            if (rng.below(5) == 0) {
                const auto& k = keys[rng.below(keys.size())];
                bool already = false;
                for (const auto& e : events)
                    if (e.ack && e.key == k) already = true;
                if (!already) {
                    q.mark_acked(k);
                    events.push_back({true, k});
                }
            }
        }
    }

    std::vector<char> journal;
    {
        std::ifstream f(master.path() / "journal.log", std::ios::binary);
        journal.assign((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
    }
    std::vector<std::size_t> boundaries{0};
    std::size_t pos = 0;
    while (pos + 8 <= journal.size()) {
        std::uint32_t len = 0;
        for (int i = 0; i < 4; ++i)
            len |= std::uint32_t{static_cast<unsigned char>(
                       journal[pos + static_cast<std::size_t>(i)])}
                   << (8 * i);
        pos += 8 + len;
        boundaries.push_back(pos);
    }
    c.require(boundaries.back() == journal.size(), "journal scan misaligned");
    c.require(boundaries.size() - 1 == events.size(),
              "entry count != event count");

    support::TempDir crash_root;
    int checked = 0;
    for (std::size_t bi = 0; bi < boundaries.size(); ++bi) {
        for (std::size_t extra : {std::size_t{0}, std::size_t{5}}) {
            std::size_t cut = boundaries[bi] + extra;
            if (extra > 0 && cut >= (bi + 1 < boundaries.size()
                                         ? boundaries[bi + 1]
                                         : journal.size()))
                continue;
            auto dir = crash_root.path() / ("crash-" + std::to_string(checked));
            std::filesystem::create_directories(dir / "blobs");
            {
                std::ofstream f(dir / "journal.log", std::ios::binary);
                f.write(journal.data(), static_cast<std::streamsize>(cut));
            }
            auto q = syncq::SyncQueue::open(dir);

            // Independent replay of the first bi events.
            std::vector<std::string> order;
            std::set<std::string> acked;
            for (std::size_t e = 0; e < bi; ++e) {
                if (events[e].ack)
                    acked.insert(events[e].key);
                else
                    order.push_back(events[e].key);
            }
            auto items = q.items();
            c.require(items.size() == order.size(),
                      "cut " + std::to_string(cut) + ": " +
                          std::to_string(items.size()) + " items, expected " +
                          std::to_string(order.size()));
            if (items.size() == order.size()) {
                std::set<std::string> seen;
                for (std::size_t i = 0; i < items.size(); ++i) {
                    c.require(items[i].key == order[i],
                              "cut " + std::to_string(cut) + ": order diverges");
                    c.require(seen.insert(items[i].key).second,
                              "duplicate item after recovery");
                    bool want_acked = acked.count(items[i].key) > 0;
                    bool is_acked =
                        items[i].state == syncq::ItemState::Acked;
                    c.require(want_acked == is_acked,
                              "cut " + std::to_string(cut) + ": acked state lost");
                }
            }
            ++checked;
            if (!c.ok) return;
        }
    }
    double elapsed = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    c.require(elapsed < 60.0,
              "durability sweep took " + std::to_string(elapsed) + "s");
}

// C5: 200 items over a seeded 30%-loss transport: everything acked on the
// client and applied exactly once on the middleware.
void c5_at_least_once(Criterion& c) {
    support::TempDir qdir, sdir;
    auto queue = syncq::SyncQueue::open(qdir.path());
    for (int i = 0; i < 200; ++i) {
        auto rec = records::new_application("c5-" + std::to_string(i), "R1",
                                            1 + i, "", "app-c5-" + std::to_string(i),
                                            1'000'000 + i);
        queue.enqueue(syncq::ItemKind::RecordManifest, records::to_manifest(rec));
    }
    middleware::ServerStore store(sdir.path());
    support::TestClock clock;
    support::LoopbackTransport transport(store, clock, 0.3, 2024);
    syncq::SyncOptions opts;
    opts.seed = 99;
    opts.max_rounds = 300;
    opts.response_timeout_ms = 500;
    auto report = syncq::sync_session(queue, transport, opts, clock);
    c.require(report.acked == 200, "acked " + std::to_string(report.acked));
    c.require(queue.acked_count() == 200, "queue lost acks");
    c.require(store.applied_key_count() == 200,
              "middleware applied " +
                  std::to_string(store.applied_key_count()) + " keys");
}

// C6: provider selection equals the brute-force argmax, ties included.
void c6_provider_selection(Criterion& c) {
    SplitMix64 rng(4096);
    for (int trial = 0; trial < 1000; ++trial) {
        std::map<std::string, double> estimates;
        int n = 2 + static_cast<int>(rng.below(6));
        for (int i = 0; i < n; ++i)
            estimates["P" + std::to_string(i)] =
                static_cast<double>(rng.below(5)) * 100'000;
        std::string want;
        double best = -1;
        for (auto it = estimates.rbegin(); it != estimates.rend(); ++it)
            if (it->second > best || (it->second == best && it->first < want)) {
                want = it->first;
                best = it->second;
            }
        c.require(netsim::pick_best_provider(estimates) == want,
                  "argmax mismatch at trial " + std::to_string(trial));
    }
}

// C7: on the canonical scenario, pinning the blackholed provider strands
// R3 while per-region-best delivers everything, faster.
void c7_strategy(Criterion& c, const std::string& scenario_path) {
    auto started = std::chrono::steady_clock::now();
    auto best_sc = load_scenario(scenario_path);
    c.require(best_sc.strategy.kind == netsim::Strategy::Kind::PerRegionBest,
              "canonical scenario must be per-region-best");

    auto single_sc = best_sc;
    single_sc.strategy = {netsim::Strategy::Kind::SingleProvider, "P1"};

    auto single = netsim::run_scenario(single_sc);
    c.require(single.regions.at("R3").items_delivered == 0,
              "single-provider R3 delivered " +
                  std::to_string(single.regions.at("R3").items_delivered));
    for (const std::string region : {"R1", "R2"}) {
        const auto& rr = single.regions.at(region);
        c.require(rr.items_delivered == rr.items_total,
                  "single-provider " + region + " incomplete");
    }

    auto best = netsim::run_scenario(best_sc);
    c.require(best.items_delivered == best.items_total,
              "per-region-best delivered " +
                  std::to_string(best.items_delivered) + "/" +
                  std::to_string(best.items_total));
    c.require(best.completion_ms < single.completion_ms,
              "completion " + std::to_string(best.completion_ms) + " !< " +
                  std::to_string(single.completion_ms));

    double elapsed = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    c.require(elapsed < 5.0,
              "scenario runs took " + std::to_string(elapsed) + "s, budget 5s");
}

// C8: zero client frames reach the core, and every status a client
// observed is the middleware store's status.
void c8_architecture(Criterion& c, const std::string& scenario_path) {
    auto sc = load_scenario(scenario_path);
    support::TempDir work;
    auto report = netsim::run_scenario(sc, work.path());
    c.require(report.client_core_frames == 0,
              "client frames reached the core");

    middleware::ServerStore store(work.path() / "server");
    std::size_t observed = 0;
    for (const auto& [region, rr] : report.regions) {
        for (const auto& [app_id, status] : rr.statuses) {
            c.require(status == "Approved" || status == "Rejected",
                      app_id + " observed as " + status);
            auto rec = store.record_of(app_id);
            c.require(rec.has_value(), app_id + " missing from the store");
            if (rec)
                c.require(records::to_string(rec->status) == status,
                          app_id + " store says " +
                              records::to_string(rec->status) +
                              ", client saw " + status);
            ++observed;
        }
    }
    c.require(observed > 0, "no statuses observed");
    // Forwarded events came from the store's forwarding path alone: each
    // observed application is in a post-forward state in the store itself.
}

// C9: identical scenario + seed produce byte-identical reports.
void c9_determinism(Criterion& c, const std::string& scenario_path) {
    auto sc = load_scenario(scenario_path);
    auto a = netsim::to_json(netsim::run_scenario(sc)).dump();
    auto b = netsim::to_json(netsim::run_scenario(sc)).dump();
    c.require(a == b, "reports differ between runs");
    c.require(!a.empty(), "empty report");
}

}  // namespace

int main(int argc, char** argv) {
    std::string scenario_path =
        argc > 1 ? argv[1] : "scenarios/three_region.json";

    run_criterion("C1 size-reduction: 10-image corpus, FSQ1 < raw/3",
                  [](Criterion& c) { c1_size_reduction(c); });
    run_criterion("C2 sharpness: boundary gradient strictly increases",
                  [](Criterion& c) { c2_sharpness(c); });
    run_criterion("C3 codec laws: roundtrip, lossless, monotone PSNR/size",
                  [](Criterion& c) { c3_codec_laws(c); });
    run_criterion("C4 queue durability under crash injection",
                  [](Criterion& c) { c4_queue_durability(c); });
    run_criterion("C5 at-least-once delivery, exactly-once effect",
                  [](Criterion& c) { c5_at_least_once(c); });
    run_criterion("C6 provider selection matches brute-force argmax",
                  [](Criterion& c) { c6_provider_selection(c); });
    run_criterion("C7 strategy: per-region-best beats the blackholed pin",
                  [&](Criterion& c) { c7_strategy(c, scenario_path); });
    run_criterion("C8 architecture: clients never touch the core",
                  [&](Criterion& c) { c8_architecture(c, scenario_path); });
    run_criterion("C9 determinism: byte-identical reports",
                  [&](Criterion& c) { c9_determinism(c, scenario_path); });

    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all 9 criteria passed\n");
    return 0;
}
