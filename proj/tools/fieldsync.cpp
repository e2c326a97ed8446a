// fieldsync: document pipeline, store-and-forward queue, middleware server
// and link simulator behind one subcommand-style binary.
//
// Exit codes: 0 success, 1 validation/config error, 2 runtime or protocol
// error (unreachable server, transport failure).

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "fieldsync/client.hpp"
#include "fieldsync/middleware.hpp"
#include "fieldsync/netsim.hpp"
#include "fieldsync/pipeline.hpp"
#include "fieldsync/queue.hpp"
#include "fieldsync/server.hpp"

namespace {

using namespace fieldsync;

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read " + path);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::string default_data_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("FIELDSYNC_DATA_DIR")) return env;
    return "";
}

volatile std::sig_atomic_t g_interrupted = 0;

int cmd_process(const std::string& in, const std::string& out,
                const imaging::PipelineConfig& cfg, bool report) {
    auto img = imaging::load_pnm(read_file(in));
    imaging::StageReport stages;
    auto doc = imaging::process_document(img, cfg, &stages);
    write_file(out, doc.bytes);
    if (report) {
        auto mono = imaging::to_monochrome(img);
        double quality_db = imaging::psnr(imaging::decode_fsq1(doc.bytes), mono);
        std::cout << "input bytes:      " << stages.input_bytes << "\n"
                  << "monochrome bytes: " << stages.monochrome_bytes << "\n"
                  << "edge pixels:      " << stages.edge_pixels << "\n"
                  << "container bytes:  " << stages.compressed_bytes << "\n"
                  << "psnr vs mono:     " << quality_db << " dB\n"
                  << "digest:           " << doc.digest << "\n";
    }
    return 0;
}

int cmd_decode(const std::string& in, const std::string& out) {
    auto img = imaging::decode_fsq1(read_file(in));
    write_file(out, imaging::save_pnm(img));
    return 0;
}

int cmd_enqueue(const std::string& dir, const std::string& kind,
                const std::string& file, std::string doc_id) {
    auto queue = syncq::SyncQueue::open(dir);
    auto bytes = read_file(file);
    std::string key;
    if (kind == "record") {
        records::from_manifest(bytes);  // reject junk before it queues
        key = queue.enqueue(syncq::ItemKind::RecordManifest, bytes);
    } else {
        if (doc_id.empty()) doc_id = "doc-" + sha256_hex(bytes).substr(0, 16);
        key = queue.enqueue(syncq::ItemKind::Document,
                            syncq::make_document_payload(doc_id, bytes));
    }
    std::cout << key << "\n";
    return 0;
}

int cmd_sync(const std::string& dir, const std::string& server,
             const syncq::SyncOptions& opts) {
    auto queue = syncq::SyncQueue::open(dir);
    auto transport = net::TcpTransport::connect(server);
    auto report = syncq::sync_session(queue, transport, opts);
    std::cout << "sent:       " << report.sent << "\n"
              << "acked:      " << report.acked << "\n"
              << "retried:    " << report.retried << "\n"
              << "bytes sent: " << report.bytes_sent << "\n"
              << "duration:   " << report.duration_ms << " ms\n";
    return queue.pending().empty() ? 0 : 2;
}

int cmd_status(const std::string& server, const std::vector<std::string>& ids) {
    auto transport = net::TcpTransport::connect(server);
    auto statuses = syncq::status_pull(transport, ids);
    for (const auto& id : ids) {
        auto it = statuses.find(id);
        std::cout << id << " "
                  << (it == statuses.end() ? "unknown"
                                           : records::to_string(it->second))
                  << "\n";
    }
    return 0;
}

int cmd_serve(const std::string& listen, const std::string& data_dir) {
    middleware::ServerStore store(data_dir);
    net::TcpServer server(listen, store);
    std::cerr << "listening on port " << server.port() << ", data in "
              << data_dir << "\n";
    std::signal(SIGINT, [](int) { g_interrupted = 1; });
    std::signal(SIGTERM, [](int) { g_interrupted = 1; });
    while (!g_interrupted)
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(scenario_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    }
    auto scenario = netsim::scenario_from_json(j);
    auto report = netsim::run_scenario(scenario);
    std::string dump = netsim::to_json(report).dump(2) + "\n";
    if (!out.empty())
        write_file(out, std::vector<std::uint8_t>(dump.begin(), dump.end()));
    std::cout << netsim::format_report_table(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"field capture pipeline, sync queue, middleware and link simulator"};
    app.require_subcommand(1);

    // process
    auto* process = app.add_subcommand("process", "PNM in, FSQ1 container out");
    std::string in_path, out_path;
    imaging::PipelineConfig cfg;
    bool report = false;
    process->add_option("input", in_path, "PGM/PPM file")->required();
    process->add_option("output", out_path, "FSQ1 file")->required();
    process->add_option("--quality", cfg.quality, "compression factor (0,1]");
    process->add_option("--edge-k", cfg.edge_k, "boundary threshold multiplier");
    process->add_option("--alpha", cfg.sharpen_alpha, "sharpen gain");
    process->add_flag("--report", report, "print per-stage sizes and PSNR");

    // decode
    auto* decode = app.add_subcommand("decode", "FSQ1 container in, PGM out");
    std::string dec_in, dec_out;
    decode->add_option("input", dec_in, "FSQ1 file")->required();
    decode->add_option("output", dec_out, "PGM file")->required();

    // enqueue
    auto* enqueue = app.add_subcommand("enqueue", "persist an item for syncing");
    std::string queue_dir, item_kind = "document", item_file, doc_id;
    enqueue->add_option("--queue-dir", queue_dir, "queue directory")->required();
    enqueue->add_option("--kind", item_kind, "record | document")
        ->check(CLI::IsMember({"record", "document"}));
    enqueue->add_option("file", item_file, "manifest JSON or FSQ1 file")
        ->required();
    enqueue->add_option("--doc-id", doc_id, "document id (default: digest prefix)");

    // sync
    auto* sync = app.add_subcommand("sync", "drain the queue against a server");
    std::string sync_dir, server_endpoint;
    syncq::SyncOptions sync_opts;
    sync->add_option("--queue-dir", sync_dir, "queue directory")->required();
    sync->add_option("--server", server_endpoint, "host:port")->required();
    sync->add_option("--batch", sync_opts.batch, "items per round");
    sync->add_option("--chunk-size", sync_opts.chunk_size, "document chunk bytes");
    sync->add_option("--rounds", sync_opts.max_rounds, "max passes");
    sync->add_option("--seed", sync_opts.seed, "jitter seed");
    sync->add_option("--device-id", sync_opts.device_id, "device label");

    // status
    auto* status = app.add_subcommand("status", "query application statuses");
    std::string status_server;
    std::vector<std::string> app_ids;
    status->add_option("--server", status_server, "host:port")->required();
    status->add_option("app_ids", app_ids, "application ids")->required();

    // serve
    auto* serve = app.add_subcommand("serve", "run the middleware server");
    std::string listen = "127.0.0.1:7600", data_dir;
    serve->add_option("--listen", listen, "host:port");
    serve->add_option("--data-dir", data_dir,
                      "persistence dir (or FIELDSYNC_DATA_DIR)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run a scenario file");
    std::string scenario_path, report_out;
    simulate->add_option("--scenario", scenario_path, "scenario JSON")->required();
    simulate->add_option("--out", report_out, "write the report JSON here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*process) return cmd_process(in_path, out_path, cfg, report);
        if (*decode) return cmd_decode(dec_in, dec_out);
        if (*enqueue) return cmd_enqueue(queue_dir, item_kind, item_file, doc_id);
        if (*sync) return cmd_sync(sync_dir, server_endpoint, sync_opts);
        if (*status) return cmd_status(status_server, app_ids);
        if (*serve) {
            std::string dir = default_data_dir(data_dir);
            if (dir.empty())
                throw ConfigError("serve needs --data-dir or FIELDSYNC_DATA_DIR");
            return cmd_serve(listen, dir);
        }
        if (*simulate) return cmd_simulate(scenario_path, report_out);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const CodecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
