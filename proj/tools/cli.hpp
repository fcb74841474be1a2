#pragma once

// fuzzprint command line. Exit codes: 0 success, 1 usage error, 2 runtime
// error (refused login, unreachable target, incompatible corpora, ...).

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fuzzprint/fuzzprint.hpp"
#if defined(FUZZPRINT_WITH_RAW_BACKEND) && defined(__linux__)
#include "fuzzprint/raw_backend.hpp"
#endif

namespace fuzzprint::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

inline constexpr const char* kDefaultCollection = "fuzzprint-collection";
inline constexpr const char* kCollectionEnv = "FUZZPRINT_COLLECTION";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OutputFormat { table, csv };

/// Settings shared by subcommands. Resolution order: flags, then the
/// config file, then FUZZPRINT_COLLECTION (collection only), then defaults.
struct CliConfig {
  std::string collection = kDefaultCollection;
  TransportConfig transport;
  std::uint32_t scan_ports = 1024;
  std::string source = "10.0.0.1";  // local address of the simulated backend
  OutputFormat format = OutputFormat::table;
};

inline OutputFormat parse_format(const std::string& v) {
  if (v == "table") return OutputFormat::table;
  if (v == "csv") return OutputFormat::csv;
  throw UsageError("format must be table or csv, got '" + v + "'");
}

inline std::uint64_t parse_number(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) throw UsageError(key + ": expected a number, got '" + v + "'");
  return out;
}

/// `key = value` lines; '#' starts a comment.
inline void apply_config_file(CliConfig& cfg, const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError& e) {
    throw UsageError(e.what());
  }
  std::size_t n = 0;
  for (auto line : split_lines(text)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(n) + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key == "collection") cfg.collection = value;
    else if (key == "timeout_ms") cfg.transport.timeout = std::chrono::milliseconds(parse_number(key, value));
    else if (key == "max_extraneous") cfg.transport.max_extraneous = parse_number(key, value);
    else if (key == "max_reconnects") cfg.transport.max_reconnects = parse_number(key, value);
    else if (key == "ports") cfg.scan_ports = static_cast<std::uint32_t>(parse_number(key, value));
    else if (key == "source") cfg.source = value;
    else if (key == "format") cfg.format = parse_format(value);
    else throw UsageError(path + ":" + std::to_string(n) + ": unknown key '" + key + "'");
  }
}

namespace detail {

inline SelectedField parse_field_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  std::string name = spec.substr(0, colon);
  if (name.rfind("tcp.", 0) != 0 && name.rfind("ip.", 0) != 0) name = "tcp." + name;
  const auto d = find_field(name);
  if (!d) throw UsageError("unknown field '" + name + "'");
  std::uint64_t step = 1;
  if (colon != std::string::npos) step = parse_number("step", spec.substr(colon + 1));
  return {*d, step};
}

inline std::vector<std::string> split_commas(const std::string& s) { return fuzzprint::detail::split_list(s); }

inline void write_or_print(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    write_text_file(path, text);
}

inline StackPersonality load_tcp_personality(const std::string& path) {
  auto p = load_personality(path);
  if (!std::holds_alternative<StackPersonality>(p)) throw UsageError(path + " is not a tcp personality");
  return std::get<StackPersonality>(std::move(p));
}

inline FtpPersonality load_ftp_personality(const std::string& path) {
  auto p = load_personality(path);
  if (!std::holds_alternative<FtpPersonality>(p)) throw UsageError(path + " is not an ftp personality");
  return std::get<FtpPersonality>(std::move(p));
}

inline std::unique_ptr<PacketBackend> make_packet_backend(const std::string& sim, std::uint32_t target,
                                                          const CliConfig& cfg) {
  if (!sim.empty()) {
    const auto source = parse_ipv4(cfg.source);
    if (!source) throw UsageError("source must be an IPv4 address");
    return std::make_unique<SimulatedPacketBackend>(load_tcp_personality(sim), target, *source);
  }
#if defined(FUZZPRINT_WITH_RAW_BACKEND) && defined(__linux__)
  return std::make_unique<RawSocketBackend>(target);
#else
  (void)target;
  throw UsageError("this build has no live packet backend; use --sim <personality>");
#endif
}

inline void print_ranking(const std::vector<RankEntry>& ranking, std::ostream& out) {
  if (ranking.empty()) {
    out << "no compatible fingerprints in the collection\n";
    return;
  }
  std::size_t n = 0;
  for (const auto& r : ranking) out << ++n << ". " << r.label << "  " << r.score.to_string() << "%\n";
}

inline Corpus load_corpus_or_usage(const std::string& path) {
  if (path.empty()) throw UsageError("--corpus is required");
  return load_corpus(path);
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"fuzzprint: fuzzing-based OS and FTP server fingerprinting"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand help for all subcommands");

  std::string collection_flag, config_path, format_flag;
  std::uint64_t timeout_ms = 0;
  auto* collection_opt = app.add_option("--collection", collection_flag, "Fingerprint collection root");
  app.add_option("--config", config_path, "Config file of key = value lines");
  auto* timeout_opt = app.add_option("--timeout", timeout_ms, "Per-probe timeout in milliseconds");
  auto* format_opt = app.add_option("--format", format_flag, "Output format: table or csv");

  // gen-os
  auto* gen_os = app.add_subcommand("gen-os", "Generate the OS probe corpus");
  std::string gen_os_out = "-", option_kinds = "WMT";
  std::vector<std::string> field_specs;
  std::uint64_t cap = kDefaultCardinalityCap;
  gen_os->add_option("--out,-o", gen_os_out, "Output corpus file ('-' for stdout)");
  gen_os->add_option("--field", field_specs, "Fuzzed field as name:step (repeatable), e.g. window:4096");
  gen_os->add_option("--option-kinds", option_kinds, "TCP option kinds for templates (subset of WMT, or 'none')");
  gen_os->add_option("--cap", cap, "Refuse corpora larger than this");

  // gen-ftp
  auto* gen_ftp = app.add_subcommand("gen-ftp", "Generate the FTP probe corpus");
  std::string gen_ftp_out = "-", commands;
  MutationParams mp;
  gen_ftp->add_option("--out,-o", gen_ftp_out, "Output corpus file ('-' for stdout)");
  gen_ftp->add_option("--max-len", mp.max_len, "Longest argument length L")->capture_default_str();
  gen_ftp->add_option("--instances", mp.instances, "Instances n per base probe")->capture_default_str();
  gen_ftp->add_option("--mutations", mp.mutations, "Mutations m per instance")->capture_default_str();
  gen_ftp->add_option("--seed", mp.seed, "Seed of the mutation stream")->capture_default_str();
  gen_ftp->add_option("--commands", commands, "Comma-separated command list");

  // scan
  auto* scan = app.add_subcommand("scan", "Half-open scan for the first open TCP port");
  std::string scan_host, scan_sim;
  std::uint32_t ports_flag = 0;
  scan->add_option("host", scan_host, "Target host")->required();
  auto* scan_ports_opt = scan->add_option("--ports", ports_flag, "Scan ports 0..N-1");
  scan->add_option("--sim", scan_sim, "Simulate the target with a tcp personality file");

  // fp-os
  auto* fp_os = app.add_subcommand("fp-os", "Fingerprint a host's TCP/IP stack");
  std::string os_host, os_label, os_corpus, os_sim, os_out;
  std::uint32_t os_ports_flag = 0;
  fp_os->add_option("host", os_host, "Target host")->required();
  fp_os->add_option("--corpus", os_corpus, "OS corpus file")->required();
  fp_os->add_option("--label", os_label, "Known OS label: store the result under it");
  auto* os_ports_opt = fp_os->add_option("--ports", os_ports_flag, "Scan ports 0..N-1 for an open port");
  fp_os->add_option("--sim", os_sim, "Simulate the target with a tcp personality file");
  fp_os->add_option("--out,-o", os_out, "Also write the fingerprint to this file");

  // fp-ftp
  auto* fp_ftp = app.add_subcommand("fp-ftp", "Fingerprint an FTP server");
  std::string ftp_host, ftp_label, ftp_corpus, ftp_sim, ftp_out;
  std::optional<std::uint16_t> ftp_port;
  fp_ftp->add_option("host", ftp_host, "Target host")->required();
  fp_ftp->add_option("--corpus", ftp_corpus, "FTP corpus file")->required();
  fp_ftp->add_option("--port", ftp_port, "FTP control port (default 21)");
  fp_ftp->add_option("--label", ftp_label, "Known server release: store the result under it");
  fp_ftp->add_option("--sim", ftp_sim, "Simulate the server in-process with an ftp personality file");
  fp_ftp->add_option("--out,-o", ftp_out, "Also write the fingerprint to this file");

  // match
  auto* match = app.add_subcommand("match", "Percentage agreement of two fingerprint files");
  std::string match_a, match_b, match_corpus;
  match->add_option("a", match_a, "First fingerprint file")->required();
  match->add_option("b", match_b, "Second fingerprint file")->required();
  match->add_option("--corpus", match_corpus, "Generating corpus (per-probe sequence numbers)");

  // matrix
  auto* matrix = app.add_subcommand("matrix", "Pairwise agreement matrix of the collection");
  std::string matrix_kind = "os", matrix_corpus;
  matrix->add_option("--kind", matrix_kind, "os or ftp")->capture_default_str();
  matrix->add_option("--corpus", matrix_corpus, "Generating corpus (per-probe sequence numbers)");

  // extract
  auto* extract = app.add_subcommand("extract", "Write the corpus reduced to discriminative probes");
  std::string extract_kind = "os", extract_corpus, extract_out = "-";
  extract->add_option("--kind", extract_kind, "os or ftp")->capture_default_str();
  extract->add_option("--corpus", extract_corpus, "Corpus the collection was built with")->required();
  extract->add_option("--out,-o", extract_out, "Reduced corpus file ('-' for stdout)");

  // sim
  auto* sim = app.add_subcommand("sim", "Check a personality file, or serve an ftp personality on localhost");
  std::string sim_file;
  std::uint16_t listen_port = 0;
  std::size_t sessions = 0;
  sim->add_option("personality", sim_file, "Personality file")->required();
  auto* listen_opt = sim->add_option("--listen", listen_port, "Serve an ftp personality on 127.0.0.1:PORT");
  sim->add_option("--sessions", sessions, "Stop after this many sessions (0 = run until killed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    CliConfig cfg;
    if (const char* env = std::getenv(kCollectionEnv); env && *env) cfg.collection = env;
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    if (collection_opt->count()) cfg.collection = collection_flag;
    if (timeout_opt->count()) cfg.transport.timeout = std::chrono::milliseconds(timeout_ms);
    if (format_opt->count()) cfg.format = parse_format(format_flag);
    if (cfg.transport.timeout.count() <= 0) throw UsageError("timeout must be positive");

    const auto kind_arg = [](const std::string& k) {
      const auto kind = parse_kind(k);
      if (!kind) throw UsageError("kind must be os or ftp, got '" + k + "'");
      return *kind;
    };

    if (*gen_os) {
      FieldSelection sel = default_field_selection();
      if (!field_specs.empty()) {
        sel.fields.clear();
        for (const auto& s : field_specs) sel.fields.push_back(detail::parse_field_spec(s));
      }
      try {
        sel.validate();
      } catch (const DomainError& e) {
        throw UsageError(e.what());
      }
      const auto templates = option_kinds == "none" ? OptionTemplateSet{{}} : default_option_templates(option_kinds);
      const auto corpus = generate_os_corpus(sel, templates, cap);
      detail::write_or_print(gen_os_out, format_corpus(corpus), out);
      if (gen_os_out != "-") out << "wrote " << corpus.size() << " probes to " << gen_os_out << " (" << corpus.checksum() << ")\n";
      return kExitOk;
    }

    if (*gen_ftp) {
      auto spec = CommandCorpusSpec::defaults();
      if (!commands.empty()) spec.commands = detail::split_commas(commands);
      try {
        spec.validate();
        mp.validate();
      } catch (const DomainError& e) {
        throw UsageError(e.what());
      }
      const auto corpus = build_ftp_corpus(spec, mp);
      detail::write_or_print(gen_ftp_out, format_corpus(corpus), out);
      if (gen_ftp_out != "-") out << "wrote " << corpus.size() << " probes to " << gen_ftp_out << " (" << corpus.checksum() << ")\n";
      return kExitOk;
    }

    if (*scan) {
      if (scan_ports_opt->count()) cfg.scan_ports = ports_flag;
      const auto target = resolve_ipv4(scan_host);
      auto backend = detail::make_packet_backend(scan_sim, target, cfg);
      const auto port = find_open_tcp_port(target, cfg.scan_ports, *backend, cfg.transport);
      if (port)
        out << "open port " << *port << " on " << scan_host << "\n";
      else
        out << "no open port found on " << scan_host << " (ports 0.." << cfg.scan_ports - 1 << ")\n";
      return kExitOk;
    }

    if (*fp_os) {
      if (os_ports_opt->count()) cfg.scan_ports = os_ports_flag;
      const auto corpus = detail::load_corpus_or_usage(os_corpus);
      if (corpus.kind != Kind::os) throw UsageError(os_corpus + " is not an os corpus");
      if (!os_label.empty()) validate_label(os_label);
      Collection collection(cfg.collection);
      if (!os_label.empty() && collection.contains(os_label, Kind::os))
        throw ConflictError("os fingerprint '" + os_label + "' already exists in " + cfg.collection);
      const auto target = resolve_ipv4(os_host);
      auto backend = detail::make_packet_backend(os_sim, target, cfg);
      const auto port = find_open_tcp_port(target, cfg.scan_ports, *backend, cfg.transport);
      const auto fp = send_and_receive(corpus, target, port, cfg.transport, *backend, os_label.empty() ? os_host : os_label);
      if (!os_out.empty()) save_fingerprint_file(os_out, fp);
      if (!os_label.empty()) {
        const auto path = collection.save(fp);
        out << "stored " << path.string() << "\n";
      } else {
        detail::print_ranking(rank(collection, fp, &corpus), out);
      }
      return kExitOk;
    }

    if (*fp_ftp) {
      const auto corpus = detail::load_corpus_or_usage(ftp_corpus);
      if (corpus.kind != Kind::ftp) throw UsageError(ftp_corpus + " is not an ftp corpus");
      if (!ftp_label.empty()) validate_label(ftp_label);
      Collection collection(cfg.collection);
      if (!ftp_label.empty() && collection.contains(ftp_label, Kind::ftp))
        throw ConflictError("ftp fingerprint '" + ftp_label + "' already exists in " + cfg.collection);
      const std::string label = ftp_label.empty() ? ftp_host : ftp_label;
      Fingerprint fp;
      if (!ftp_sim.empty()) {
        fp = ftp_session(corpus, serve_in_process(detail::load_ftp_personality(ftp_sim)), cfg.transport, label);
      } else {
        fp = ftp_session(corpus, TargetAddress{ftp_host, ftp_port}, cfg.transport, label);
      }
      if (!ftp_out.empty()) save_fingerprint_file(ftp_out, fp);
      if (!ftp_label.empty()) {
        const auto path = collection.save(fp);
        out << "stored " << path.string() << "\n";
      } else {
        detail::print_ranking(rank(collection, fp), out);
      }
      return kExitOk;
    }

    if (*match) {
      const auto a = load_fingerprint_file(match_a);
      const auto b = load_fingerprint_file(match_b);
      std::optional<Corpus> corpus;
      if (!match_corpus.empty()) corpus = load_corpus(match_corpus);
      out << match_file(a, b, corpus ? &*corpus : nullptr).to_string() << "\n";
      return kExitOk;
    }

    if (*matrix) {
      const auto kind = kind_arg(matrix_kind);
      Collection collection(cfg.collection);
      std::optional<Corpus> corpus;
      if (!matrix_corpus.empty()) corpus = load_corpus(matrix_corpus);
      const auto report = similarity_matrix(collection, kind, corpus ? &*corpus : nullptr);
      out << (cfg.format == OutputFormat::csv ? format_matrix_csv(report) : format_matrix_table(report));
      return kExitOk;
    }

    if (*extract) {
      const auto kind = kind_arg(extract_kind);
      const auto corpus = load_corpus(extract_corpus);
      if (corpus.kind != kind) throw UsageError(extract_corpus + " is not an " + extract_kind + " corpus");
      Collection collection(cfg.collection);
      std::vector<Fingerprint> fps;
      for (auto& fp : collection.load_all(kind))
        if (fp.corpus_checksum == corpus.checksum()) fps.push_back(std::move(fp));
      const auto indices = extract_discriminative_probes(fps, &corpus);
      const auto reduced = reduce_corpus(corpus, indices);
      detail::write_or_print(extract_out, format_corpus(reduced), out);
      if (extract_out != "-")
        out << "kept " << reduced.size() << " of " << corpus.size() << " probes in " << extract_out << "\n";
      return kExitOk;
    }

    if (*sim) {
      auto p = load_personality(sim_file);
      if (!listen_opt->count()) {
        out << format_personality(p);
        return kExitOk;
      }
      if (!std::holds_alternative<FtpPersonality>(p)) throw UsageError("only ftp personalities can be served");
      LiveFtpServer server(std::get<FtpPersonality>(std::move(p)), listen_port);
      out << "serving on 127.0.0.1:" << server.port() << std::endl;
      while (sessions == 0 || server.sessions_served() < sessions)
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace fuzzprint::cli
