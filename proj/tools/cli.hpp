#pragma once

// Command driver for the `modeltrust` tool. Exit codes:
//   0  success / gate ALLOW
//   1  verification failure / gate DENY
//   2  usage, parse, or validation error
//   3  I/O error

#include <CLI11.hpp>
#include <sys/stat.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "modeltrust/modeltrust.hpp"

namespace modeltrust::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDenied = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;

inline constexpr const char* kLogDirEnv = "MODELTRUST_LOG_DIR";

namespace fs = std::filesystem;

namespace detail {

inline void emit_json(std::ostream& os, const nlohmann::json& doc) { os << doc.dump() << '\n'; }

inline nlohmann::json read_json_file(const fs::path& path, const char* what) {
  const std::string text = read_file(path);
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ParseError(std::string(what) + " is not valid JSON: " + path.string());
  return doc;
}

inline std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ParseError("not a number in --values: '" + item + "'");
    }
    if (used != item.size()) throw ParseError("not a number in --values: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ParseError("--values is empty");
  return out;
}

inline std::vector<Digest> read_manifest(const fs::path& path) {
  auto doc = read_json_file(path, "chunk manifest");
  if (!doc.is_object() || !doc.contains("leaves")) throw ParseError("chunk manifest lacks 'leaves'");
  return digests_from_json(doc["leaves"], "leaves");
}

inline void write_private(const fs::path& path, const std::string& data) {
  write_file(path, data);
  ::chmod(path.c_str(), 0600);
}

// Statement metadata file for `attest create`.
inline AttestationStatement statement_from_meta(const nlohmann::json& meta) {
  if (!meta.is_object()) throw ParseError("metadata must be a JSON object");
  static const std::set<std::string> kKnown = {"model_name",           "model_version",      "dataset_id",
                                               "dataset_commitment",   "alignment_policy_version",
                                               "training_timestamp",   "parameter_count"};
  for (const auto& [key, _] : meta.items())
    if (!kKnown.contains(key)) throw ParseError("unknown metadata key '" + key + "'", 0, key);
  AttestationStatement s;
  s.model_name = modeltrust::detail::string_field(meta, "model_name");
  s.model_version = modeltrust::detail::string_field(meta, "model_version");
  s.dataset_id = modeltrust::detail::string_field(meta, "dataset_id");
  s.alignment_policy_version = modeltrust::detail::string_field(meta, "alignment_policy_version");
  s.training_timestamp = modeltrust::detail::string_field(meta, "training_timestamp");
  if (meta.contains("dataset_commitment")) s.dataset_commitment = modeltrust::detail::digest_field(meta, "dataset_commitment");
  if (meta.contains("parameter_count")) s.parameter_count = modeltrust::detail::uint_field(meta, "parameter_count");
  return s;
}

inline Keyring load_keyring(const std::vector<std::string>& files) {
  Keyring ring;
  for (const auto& f : files) ring.add(load_public_key(f));
  return ring;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Model artifact attestation, transparency log, deployment gate, and LSRI scoring"};
  app.require_subcommand(1);
  std::string output = "json";
  app.add_option("--output", output, "Output format")->check(CLI::IsMember({"json", "table"}));

  std::function<int()> action;

  const char* env_log = std::getenv(kLogDirEnv);
  const std::string default_log = env_log ? env_log : "";

  // keygen
  auto* keygen = app.add_subcommand("keygen", "Generate an Ed25519 keypair");
  std::string key_dir = ".", key_name = "signing";
  keygen->add_option("--out-dir", key_dir, "Directory for <name>.pub and <name>.key");
  keygen->add_option("--name", key_name, "Base name of the key files");
  keygen->callback([&] {
    action = [&] {
      fs::create_directories(key_dir);
      KeyPair kp = KeyPair::generate();
      fs::path pub = fs::path(key_dir) / (key_name + ".pub");
      fs::path sec = fs::path(key_dir) / (key_name + ".key");
      write_file(pub, encode_public_key(kp.public_key()));
      detail::write_private(sec, encode_private_key(kp));
      detail::emit_json(out, {{"fingerprint", to_hex(kp.fingerprint())}, {"private_key", sec.string()},
                              {"public_key", pub.string()}});
      return kExitOk;
    };
  });

  // digest
  auto* digest = app.add_subcommand("digest", "Hash an artifact (whole-file SHA-256 and chunked Merkle root)");
  std::string digest_artifact, digest_manifest;
  std::uint64_t digest_chunk = kDefaultChunkSize;
  unsigned threads = 0;
  digest->add_option("--artifact", digest_artifact, "Artifact path, or - for standard input")->required();
  digest->add_option("--chunk-size", digest_chunk, "Chunk size in bytes (power of two >= 4096)");
  digest->add_option("--threads", threads, "Hashing threads (0 = all cores)");
  digest->add_option("--manifest-out", digest_manifest, "Write the chunk leaf hashes here");
  digest->callback([&] {
    action = [&] {
      ChunkedDigest d = digest_artifact == "-" ? hash_artifact_with_leaves(std::cin, digest_chunk, {threads})
                                               : hash_artifact_with_leaves(fs::path(digest_artifact), digest_chunk, {threads});
      if (!digest_manifest.empty())
        write_file(digest_manifest, nlohmann::json{{"leaves", digests_to_json(d.leaves)}}.dump() + "\n");
      if (output == "table") {
        TextTable t({"Field", "Value"});
        t.add_row({"full_sha256", to_hex(d.digest.full_sha256)});
        t.add_row({"merkle_root", to_hex(d.digest.merkle_root)});
        t.add_row({"chunk_size", std::to_string(d.digest.chunk_size)});
        t.add_row({"chunk_count", std::to_string(d.digest.chunk_count)});
        t.add_row({"total_length", std::to_string(d.digest.total_length)});
        t.print(out);
      } else {
        detail::emit_json(out, artifact_to_json(d.digest));
      }
      return kExitOk;
    };
  });

  // attest
  auto* attest = app.add_subcommand("attest", "Create or verify signed attestation statements");
  attest->require_subcommand(1);
  auto* attest_create = attest->add_subcommand("create", "Hash an artifact, build its statement, and sign it");
  std::string ac_artifact, ac_meta, ac_key, ac_parent, ac_statement, ac_envelope, ac_manifest;
  std::uint64_t ac_chunk = kDefaultChunkSize;
  attest_create->add_option("--artifact", ac_artifact, "Artifact path")->required();
  attest_create->add_option("--meta", ac_meta, "Metadata JSON file")->required();
  attest_create->add_option("--key", ac_key, "Private key file")->required();
  attest_create->add_option("--chunk-size", ac_chunk, "Chunk size in bytes");
  attest_create->add_option("--parent", ac_parent, "Parent statement file (derived models)");
  attest_create->add_option("--out-statement", ac_statement, "Statement output (default <artifact>.statement.json)");
  attest_create->add_option("--out-envelope", ac_envelope, "Envelope output (default <artifact>.envelope.json)");
  attest_create->add_option("--out-manifest", ac_manifest, "Chunk manifest output (optional)");
  attest_create->callback([&] {
    action = [&] {
      validate_chunk_size(ac_chunk);
      AttestationStatement s = detail::statement_from_meta(detail::read_json_file(ac_meta, "metadata"));
      KeyPair key = load_private_key(ac_key);
      ChunkedDigest d = hash_artifact_with_leaves(fs::path(ac_artifact), ac_chunk);
      s.artifact = d.digest;
      if (!ac_parent.empty()) s = derive_statement(decode_statement(read_file(ac_parent)), s);
      const std::string canonical = canonical_encode(s);
      SignatureEnvelope env = sign_statement(s, key);
      if (ac_statement.empty()) ac_statement = ac_artifact + ".statement.json";
      if (ac_envelope.empty()) ac_envelope = ac_artifact + ".envelope.json";
      write_file(ac_statement, canonical);
      write_file(ac_envelope, encode_envelope(env));
      if (!ac_manifest.empty())
        write_file(ac_manifest, nlohmann::json{{"leaves", digests_to_json(d.leaves)}}.dump() + "\n");
      detail::emit_json(out, {{"envelope", ac_envelope},
                              {"statement", ac_statement},
                              {"statement_digest", to_hex(env.statement_digest)}});
      return kExitOk;
    };
  });

  auto* attest_verify = attest->add_subcommand("verify", "Verify a statement's signature");
  std::string av_statement, av_envelope;
  std::vector<std::string> av_keys;
  attest_verify->add_option("--statement", av_statement)->required();
  attest_verify->add_option("--envelope", av_envelope)->required();
  attest_verify->add_option("--trust-keys", av_keys, "Trusted public key files")->required()->delimiter(',');
  attest_verify->callback([&] {
    action = [&] {
      Keyring ring = detail::load_keyring(av_keys);
      const std::string bytes = read_file(av_statement);
      SignatureEnvelope env = decode_envelope(read_file(av_envelope));
      SignatureVerdict v = verify_bytes(bytes, env, ring);
      detail::emit_json(out, {{"accepted", v.accepted()},
                              {"reason", v.failure ? nlohmann::json(to_string(*v.failure)) : nlohmann::json(nullptr)}});
      return v.accepted() ? kExitOk : kExitDenied;
    };
  });

  // log
  auto* log = app.add_subcommand("log", "Transparency log operations");
  log->require_subcommand(1);
  std::string log_dir = default_log;
  std::string log_key;
  auto add_log_dir = [&](CLI::App* cmd) {
    auto* opt = cmd->add_option("--log", log_dir, std::string("Log directory (default $") + kLogDirEnv + ")");
    if (default_log.empty()) opt->required();
  };

  auto* log_init = log->add_subcommand("init", "Create an empty log");
  add_log_dir(log_init);
  log_init->add_option("--log-key", log_key, "Existing private key for the log (default: generate)");
  log_init->callback([&] {
    action = [&] {
      std::optional<KeyPair> kp;
      if (log_key.empty()) {
        kp = KeyPair::generate();
        fs::create_directories(log_dir);
        detail::write_private(fs::path(log_dir) / "log_key.sec", encode_private_key(*kp));
      } else {
        kp = load_private_key(log_key);
      }
      TransparencyLog::create(log_dir, *kp);
      detail::emit_json(out, {{"log", log_dir}, {"log_key_fingerprint", to_hex(kp->fingerprint())}});
      return kExitOk;
    };
  });

  auto* log_append = log->add_subcommand("append", "Append a statement to the log");
  std::string la_statement;
  add_log_dir(log_append);
  log_append->add_option("--statement", la_statement, "Statement file")->required();
  log_append->add_option("--log-key", log_key, "Log private key (default <log>/log_key.sec)");
  log_append->callback([&] {
    action = [&] {
      if (log_key.empty()) log_key = (fs::path(log_dir) / "log_key.sec").string();
      KeyPair kp = load_private_key(log_key);
      auto tlog = TransparencyLog::open(log_dir, kp);
      AppendResult r = tlog.append(decode_statement(read_file(la_statement)));
      detail::emit_json(out, {{"head", head_to_json(r.head)}, {"index", r.index}});
      return kExitOk;
    };
  });

  auto* log_head = log->add_subcommand("head", "Print the latest signed tree head");
  add_log_dir(log_head);
  log_head->callback([&] {
    action = [&] {
      auto tlog = TransparencyLog::open(log_dir);
      auto head = tlog.latest_head();
      detail::emit_json(out, head ? head_to_json(*head) : nlohmann::json(nullptr));
      return kExitOk;
    };
  });

  auto* log_incl = log->add_subcommand("prove-inclusion", "Inclusion proof for an entry");
  std::optional<std::uint64_t> li_index, li_size;
  std::string li_statement;
  add_log_dir(log_incl);
  log_incl->add_option("--index", li_index, "Entry index");
  log_incl->add_option("--statement", li_statement, "Locate the entry by statement file instead");
  log_incl->add_option("--tree-size", li_size, "Tree size (default: current)");
  log_incl->callback([&] {
    action = [&]() -> int {
      auto tlog = TransparencyLog::open(log_dir);
      std::uint64_t index = 0;
      if (li_index) {
        index = *li_index;
      } else if (!li_statement.empty()) {
        auto found = tlog.find_leaf(merkle::leaf_hash(canonical_encode(decode_statement(read_file(li_statement)))));
        if (!found) {
          err << "statement not present in log\n";
          return kExitDenied;
        }
        index = *found;
      } else {
        throw ParseError("one of --index or --statement is required");
      }
      detail::emit_json(out, inclusion_to_json(tlog.prove_inclusion(index, li_size.value_or(tlog.size()))));
      return kExitOk;
    };
  });

  auto* log_cons = log->add_subcommand("prove-consistency", "Consistency proof between two tree sizes");
  std::uint64_t lc_old = 0;
  std::optional<std::uint64_t> lc_new;
  add_log_dir(log_cons);
  log_cons->add_option("--old", lc_old, "Old tree size")->required();
  log_cons->add_option("--new", lc_new, "New tree size (default: current)");
  log_cons->callback([&] {
    action = [&] {
      auto tlog = TransparencyLog::open(log_dir);
      detail::emit_json(out, consistency_to_json(tlog.prove_consistency(lc_old, lc_new.value_or(tlog.size()))));
      return kExitOk;
    };
  });

  auto* log_audit = log->add_subcommand("audit", "Check a head history against the log");
  std::string la_heads;
  add_log_dir(log_audit);
  log_audit->add_option("--heads", la_heads, "JSON array of signed tree heads (default: the log's journal)");
  log_audit->callback([&] {
    action = [&] {
      auto tlog = TransparencyLog::open(log_dir);
      std::vector<SignedTreeHead> history;
      if (la_heads.empty()) {
        history = tlog.heads();
      } else {
        auto doc = detail::read_json_file(la_heads, "head history");
        if (!doc.is_array()) throw ParseError("head history must be a JSON array");
        for (const auto& h : doc) history.push_back(head_from_json(h));
      }
      AuditReport r = audit(tlog, history);
      nlohmann::json doc = {{"clean", r.clean}, {"consistency_checks", r.consistency_checks}, {"detail", r.detail},
                            {"heads", history.size()}, {"tree_size", tlog.size()}};
      doc["violation_at"] = r.violation_at ? nlohmann::json(*r.violation_at) : nlohmann::json(nullptr);
      if (output == "table") {
        out << (r.clean ? "clean" : "VIOLATION") << ": " << history.size() << " heads, " << r.consistency_checks
            << " consistency checks" << (r.clean ? "" : " - " + r.detail) << '\n';
      } else {
        detail::emit_json(out, doc);
      }
      return r.clean ? kExitOk : kExitDenied;
    };
  });

  // gate
  auto* gate = app.add_subcommand("gate", "Pre-deployment verification gate");
  gate->require_subcommand(1);
  auto* gate_check = gate->add_subcommand("check", "Evaluate the gate; exit 0 on ALLOW, 1 on DENY");
  std::string gc_artifact, gc_statement, gc_envelope, gc_policy, gc_store, gc_manifest, gc_now;
  std::optional<std::uint64_t> gc_seed;
  std::string gc_log = default_log;
  gate_check->add_option("--artifact", gc_artifact)->required();
  gate_check->add_option("--statement", gc_statement)->required();
  gate_check->add_option("--envelope", gc_envelope)->required();
  gate_check->add_option("--policy", gc_policy)->required();
  gate_check->add_option("--log", gc_log, "Transparency log directory");
  gate_check->add_option("--store", gc_store, "Statement store for ancestor lookup");
  gate_check->add_option("--manifest", gc_manifest, "Chunk manifest for merkle-sample mode");
  gate_check->add_option("--seed", gc_seed, "Seed for chunk sampling (default: random)");
  gate_check->add_option("--now", gc_now, "Evaluation time, RFC 3339 (default: current time)");
  gate_check->callback([&] {
    action = [&] {
      Policy policy = parse_policy(read_file(gc_policy));
      TimePoint now = now_utc();
      if (!gc_now.empty()) {
        auto t = parse_rfc3339(gc_now);
        if (!t) throw ParseError("--now is not RFC 3339");
        now = *t;
      }
      auto deny = [&](Reason r, const std::string& note) {
        GateVerdict v;
        v.checked_at = format_rfc3339(now);
        v.reasons = {r};
        v.notes = {std::string(to_string(r)) + ": " + note};
        if (output == "table") print_verdict(out, v);
        else detail::emit_json(out, verdict_to_json(v));
        return kExitDenied;
      };

      // Evidence problems deny rather than abort.
      std::optional<AttestationStatement> statement;
      std::optional<SignatureEnvelope> envelope;
      try {
        statement = decode_statement(read_file(gc_statement));
      } catch (const Error& e) {
        return deny(Reason::kSignatureInvalid, std::string("statement unusable: ") + e.what());
      }
      try {
        envelope = decode_envelope(read_file(gc_envelope));
      } catch (const Error& e) {
        return deny(Reason::kSignatureInvalid, std::string("envelope unusable: ") + e.what());
      }

      GateInput in{ArtifactSource(fs::path(gc_artifact)), std::nullopt, *statement, *envelope, std::nullopt, nullptr,
                   now, 0};
      in.sample_seed = gc_seed ? *gc_seed : (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
      if (!gc_manifest.empty()) {
        try {
          in.chunk_manifest = detail::read_manifest(gc_manifest);
        } catch (const Error&) {
          in.chunk_manifest.reset();
        }
      }
      std::optional<TransparencyLog> tlog;
      if (!gc_log.empty()) {
        try {
          tlog.emplace(TransparencyLog::open(gc_log));
          auto head = tlog->latest_head();
          auto index = tlog->find_leaf(merkle::leaf_hash(canonical_encode(*statement)));
          if (head && index) in.log_evidence = LogEvidence{*head, tlog->prove_inclusion(*index, head->tree_size)};
        } catch (const Error&) {
          in.log_evidence.reset();
        }
      }
      StatementStore store;
      if (!gc_store.empty()) {
        try {
          store = StatementStore::load_directory(gc_store);
        } catch (const Error&) {
        }
      }
      in.resolver = store.resolver();

      GateVerdict v = evaluate_gate(in, policy);
      if (output == "table") print_verdict(out, v);
      else detail::emit_json(out, verdict_to_json(v));
      return v.allowed() ? kExitOk : kExitDenied;
    };
  });

  // provenance
  auto* prov = app.add_subcommand("provenance", "Provenance chain operations");
  prov->require_subcommand(1);
  auto* prov_trace = prov->add_subcommand("trace", "Walk and verify a derived model's ancestry");
  std::string pt_statement, pt_store;
  std::vector<std::string> pt_keys;
  prov_trace->add_option("--statement", pt_statement)->required();
  prov_trace->add_option("--store", pt_store, "Directory of *.statement.json / *.envelope.json pairs")->required();
  prov_trace->add_option("--trust-keys", pt_keys, "Trusted public key files")->required()->delimiter(',');
  prov_trace->callback([&] {
    action = [&] {
      Keyring ring = detail::load_keyring(pt_keys);
      AttestationStatement leaf = decode_statement(read_file(pt_statement));
      StatementStore store = StatementStore::load_directory(pt_store);
      ProvenanceVerdict v = trace_provenance(leaf, store.resolver(), ring);
      nlohmann::json chain = nlohmann::json::array();
      for (const auto& s : v.chain)
        chain.push_back({{"model_name", s.model_name}, {"model_version", s.model_version},
                         {"statement_digest", to_hex(statement_digest(s))}});
      nlohmann::json doc = {{"chain", chain}, {"ok", v.ok()}, {"signatures_verified", v.signatures_verified}};
      if (!v.ok()) {
        doc["failure"] = to_string(*v.failure);
        doc["failure_depth"] = v.failure_depth;
      }
      if (output == "table") {
        TextTable t({"Depth", "Model", "Version", "Statement digest"});
        for (std::size_t i = 0; i < v.chain.size(); ++i) {
          const auto& s = v.chain[i];
          t.add_row({std::to_string(v.chain.size() - 1 - i), s.model_name, s.model_version, to_hex(statement_digest(s))});
        }
        t.print(out);
        out << (v.ok() ? "chain verified" : std::string("FAILED: ") + to_string(*v.failure) + " at depth " +
                                                std::to_string(v.failure_depth))
            << '\n';
      } else {
        detail::emit_json(out, doc);
      }
      return v.ok() ? kExitOk : kExitDenied;
    };
  });

  // lsri
  auto* lsri_cmd = app.add_subcommand("lsri", "LLM Scalability Risk Index analytics");
  lsri_cmd->require_subcommand(1);
  auto* lsri_score = lsri_cmd->add_subcommand("score", "Score a profile");
  std::string ls_profile, ls_verdict;
  lsri_score->add_option("--profile", ls_profile)->required();
  lsri_score->add_option("--gate-verdict", ls_verdict, "Gate verdict JSON; a DENY zeroes the integrity multiplier");
  lsri_score->callback([&] {
    action = [&] {
      lsri::LsriProfile p = lsri::parse_profile(read_file(ls_profile));
      if (!ls_verdict.empty()) {
        auto doc = detail::read_json_file(ls_verdict, "gate verdict");
        if (!doc.is_object() || !doc.contains("decision") || !doc["decision"].is_string())
          throw ParseError("gate verdict lacks 'decision'");
        GateVerdict v;
        v.decision = doc["decision"] == "ALLOW" ? Decision::kAllow : Decision::kDeny;
        for (auto& viol : violation_from_verdict(v)) p.violations.push_back(viol);
      }
      lsri::LsriReport r = lsri::compute_lsri(p);
      if (output == "table") lsri::print_report(out, p, r);
      else detail::emit_json(out, lsri::report_to_json(r));
      return kExitOk;
    };
  });

  auto* lsri_sweep = lsri_cmd->add_subcommand("sweep", "Sensitivity sweep over one factor");
  std::string lw_profile, lw_factor, lw_values;
  lsri_sweep->add_option("--profile", lw_profile)->required();
  lsri_sweep->add_option("--factor", lw_factor)->required();
  lsri_sweep->add_option("--values", lw_values, "Comma-separated raw metric values")->required();
  lsri_sweep->callback([&] {
    action = [&] {
      lsri::LsriProfile p = lsri::parse_profile(read_file(lw_profile));
      auto points = lsri::sensitivity_sweep(p, lw_factor, detail::parse_values(lw_values));
      if (output == "table") lsri::print_sweep(out, lw_factor, points);
      else detail::emit_json(out, lsri::sweep_to_json(lw_factor, points));
      return kExitOk;
    };
  });

  auto* lsri_compare = lsri_cmd->add_subcommand("compare", "Compare two profiles side by side");
  std::string lc_a, lc_b;
  lsri_compare->add_option("--a", lc_a)->required();
  lsri_compare->add_option("--b", lc_b)->required();
  lsri_compare->callback([&] {
    action = [&] {
      lsri::LsriProfile a = lsri::parse_profile(read_file(lc_a));
      lsri::LsriProfile b = lsri::parse_profile(read_file(lc_b));
      auto cmp = lsri::compare_profiles(a, b);
      if (output == "table") lsri::print_comparison(out, a, b, cmp);
      else detail::emit_json(out, lsri::comparison_to_json(cmp));
      return kExitOk;
    };
  });

  std::vector<const char*> argv;
  argv.push_back("modeltrust");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }
  if (!action) {
    err << "usage error: no command given\n";
    return kExitUsage;
  }

  try {
    return action();
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace modeltrust::cli
