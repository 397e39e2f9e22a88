// Command-line driver for the pre-training pipeline: corpus
// construction, synthetic corpus generation, joint pre-training,
// probing, embedding export and gradient checking.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "erpt/corpus.hpp"
#include "erpt/encoder.hpp"
#include "erpt/gradcheck.hpp"
#include "erpt/probe.hpp"
#include "erpt/repr.hpp"
#include "erpt/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace erpt;

namespace {

std::uint64_t fnv64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash input file: " + path);
  std::uint64_t h = 14695981039346656037ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const json& config,
                        const std::vector<std::string>& inputs) {
  json j;
  j["command"] = command;
  j["config"] = config;
  json hashes = json::object();
  for (const auto& p : inputs) hashes[p] = fnv64_file(p);
  j["input_hashes"] = hashes;
  write_file(out_dir + "/run.json", j.dump(2) + "\n");
}

Vocabulary vocab_from_documents(const std::vector<Document>& docs) {
  const Vocabulary reserved_only({});
  std::set<std::string> tokens;
  for (const auto& d : docs)
    for (const auto& t : d.tokens)
      if (reserved_only.lookup(t) == kUnkId && t != "[UNK]") tokens.insert(t);
  std::set<std::string> folded;
  std::vector<std::string> content;
  for (const auto& t : tokens) {
    std::string key = t;
    for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (folded.insert(key).second) content.push_back(key);
  }
  return Vocabulary(content);
}

PlantedCorpus load_planted(const std::string& dir) {
  PlantedCorpus out;
  auto parsed = parse_corpus(dir + "/corpus.jsonl");
  if (!parsed.issues.empty())
    throw std::runtime_error("planted corpus has malformed records in " + dir);
  out.documents = std::move(parsed.documents);
  out.kb = parse_kb(dir + "/kb.tsv", dir + "/relation_names.tsv");
  {
    std::ifstream in(dir + "/entity_types.tsv");
    if (!in) throw std::runtime_error("cannot open " + dir + "/entity_types.tsv");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw std::runtime_error("bad entity_types.tsv line: " + line);
      out.entity_types[line.substr(0, tab)] = line.substr(tab + 1);
    }
  }
  {
    std::ifstream in(dir + "/split.json");
    if (!in) throw std::runtime_error("cannot open " + dir + "/split.json");
    json j = json::parse(in);
    out.train_doc_ids = j.at("train").get<std::vector<std::string>>();
    out.test_doc_ids = j.at("test").get<std::vector<std::string>>();
  }
  return out;
}

void save_planted(const PlantedCorpus& corpus, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir + "/corpus.jsonl");
    for (const auto& d : corpus.documents) {
      json j;
      j["id"] = d.id;
      j["tokens"] = d.tokens;
      json bounds = json::array();
      for (const auto& [s, e] : d.sentence_bounds) bounds.push_back({s, e});
      j["sentence_bounds"] = bounds;
      json mentions = json::array();
      for (const auto& m : d.mentions)
        mentions.push_back({{"entity_id", m.entity_id},
                            {"start", m.span.start},
                            {"end", m.span.end}});
      j["mentions"] = mentions;
      out << j.dump() << "\n";
    }
  }
  {
    std::ofstream out(dir + "/kb.tsv");
    for (const auto& [h, r, t] : corpus.kb.triples)
      out << h << "\t" << r << "\t" << t << "\n";
  }
  {
    std::ofstream out(dir + "/relation_names.tsv");
    for (const auto& [r, name] : corpus.kb.relation_names)
      out << r << "\t" << name << "\n";
  }
  {
    std::ofstream out(dir + "/entity_types.tsv");
    for (const auto& [e, t] : corpus.entity_types) out << e << "\t" << t << "\n";
  }
  {
    json j;
    j["train"] = corpus.train_doc_ids;
    j["test"] = corpus.test_doc_ids;
    write_file(dir + "/split.json", j.dump(2) + "\n");
  }
}

std::uint64_t fnv64_string(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

struct CorpusArgs {
  std::string planted_dir;
  std::string corpus_path, kb_path, names_path, exclusions_path;
  double fraction = 1.0;
  std::size_t min_words = 128, min_entities = 4, min_triples = 4;

  void attach(CLI::App* cmd) {
    cmd->add_option("--planted", planted_dir,
                    "directory produced by gen-planted (corpus + kb)");
    cmd->add_option("--corpus", corpus_path, "line-delimited document file");
    cmd->add_option("--kb", kb_path, "knowledge-base triples TSV");
    cmd->add_option("--rel-names", names_path, "relation display-name TSV");
    cmd->add_option("--exclusions", exclusions_path, "excluded head/tail pair TSV");
    cmd->add_option("--fraction", fraction,
                    "keep this fraction of documents (hashed by id)");
    cmd->add_option("--min-words", min_words, "word filter threshold (strict >)");
    cmd->add_option("--min-entities", min_entities, "entity filter threshold (strict >)");
    cmd->add_option("--min-triples", min_triples, "triple filter threshold (strict >)");
  }

  std::vector<std::string> input_files() const {
    std::vector<std::string> v;
    if (!planted_dir.empty()) {
      v = {planted_dir + "/corpus.jsonl", planted_dir + "/kb.tsv",
           planted_dir + "/relation_names.tsv"};
    } else {
      v = {corpus_path, kb_path, names_path};
      if (!exclusions_path.empty()) v.push_back(exclusions_path);
    }
    return v;
  }

  // Load documents + KB, apply fraction subsampling, build triple sets
  // and the filters.
  FilteredCorpus load(KnowledgeBase& kb, std::vector<ParseIssue>* issues) const {
    std::vector<Document> docs;
    if (!planted_dir.empty()) {
      auto planted = load_planted(planted_dir);
      docs = std::move(planted.documents);
      kb = std::move(planted.kb);
    } else {
      if (corpus_path.empty() || kb_path.empty() || names_path.empty())
        throw std::runtime_error(
            "either --planted or --corpus/--kb/--rel-names is required");
      auto parsed = parse_corpus(corpus_path);
      docs = std::move(parsed.documents);
      if (issues) *issues = std::move(parsed.issues);
      kb = parse_kb(kb_path, names_path);
    }
    if (fraction < 1.0) {
      std::vector<Document> kept;
      for (auto& d : docs)
        if (static_cast<double>(fnv64_string(d.id) % 1000000) <
            fraction * 1000000.0)
          kept.push_back(std::move(d));
      docs = std::move(kept);
    }
    ExclusionSet excl;
    if (!exclusions_path.empty()) excl = parse_exclusions(exclusions_path);
    std::vector<DocumentTripleSet> tsets;
    tsets.reserve(docs.size());
    for (const auto& d : docs) tsets.push_back(build_doc_triples(d, kb, excl));
    return filter_documents(docs, tsets, min_words, min_entities, min_triples);
  }
};

json train_config_json(const EncoderConfig& enc, const TrainConfig& train) {
  return json::parse(configs_to_json(enc, train));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entity/relation-aware contrastive pre-training pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file with flag defaults")
      ->envname("ERPT_CONFIG");

  std::string out_dir = "out";

  // ---- build-corpus -------------------------------------------------
  auto* cmd_build = app.add_subcommand(
      "build-corpus", "parse documents, build triple sets, filter, report stats");
  CorpusArgs build_args;
  build_args.attach(cmd_build);
  cmd_build->add_option("--out", out_dir, "output directory");

  // ---- gen-planted --------------------------------------------------
  auto* cmd_gen = app.add_subcommand(
      "gen-planted", "generate a synthetic corpus with planted relations");
  std::size_t gen_relations = 8, gen_entities = 40, gen_docs = 200;
  std::uint64_t gen_seed = 7;
  cmd_gen->add_option("--relations", gen_relations, "number of relation types");
  cmd_gen->add_option("--entities", gen_entities, "size of the entity pool");
  cmd_gen->add_option("--docs", gen_docs, "number of documents");
  cmd_gen->add_option("--seed", gen_seed, "generation seed");
  cmd_gen->add_option("--out", out_dir, "output directory");

  // ---- pretrain -----------------------------------------------------
  auto* cmd_train = app.add_subcommand("pretrain", "joint ED/RD/MLM pre-training");
  CorpusArgs train_corpus_args;
  train_corpus_args.attach(cmd_train);
  EncoderConfig enc_cfg;
  TrainConfig train_cfg;
  std::string loss_list = "ed,rd,mlm", rd_scope = "all", repr_mode = "mean";
  std::string resume_path;
  cmd_train->add_option("--layers", enc_cfg.layers, "encoder layers");
  cmd_train->add_option("--hidden", enc_cfg.hidden_dim, "hidden dimension");
  cmd_train->add_option("--heads", enc_cfg.heads, "attention heads");
  cmd_train->add_option("--ffn", enc_cfg.ffn_dim, "feed-forward dimension");
  cmd_train->add_option("--max-seq", enc_cfg.max_seq_len, "maximum sequence length");
  cmd_train->add_flag("--tie-mlm", enc_cfg.tie_mlm, "tie MLM head to token embeddings");
  cmd_train->add_option("--steps", train_cfg.total_steps, "training steps");
  cmd_train->add_option("--batch-docs", train_cfg.batch_size_docs, "documents per batch");
  cmd_train->add_option("--lr", train_cfg.base_lr, "peak learning rate");
  cmd_train->add_option("--warmup", train_cfg.warmup_frac, "warmup fraction");
  cmd_train->add_option("--weight-decay", train_cfg.weight_decay, "decoupled weight decay");
  cmd_train->add_option("--temperature", train_cfg.temperature, "contrastive temperature");
  cmd_train->add_option("--n-neg", train_cfg.n_neg, "max RD negatives per sample");
  cmd_train->add_option("--rd-cap", train_cfg.rd_per_batch_cap, "RD samples per batch");
  cmd_train->add_option("--mask-rate", train_cfg.mask_rate, "MLM masking rate");
  cmd_train->add_option("--grad-accum", train_cfg.grad_accum, "gradient accumulation");
  cmd_train->add_option("--ckpt-interval", train_cfg.checkpoint_interval,
                        "checkpoint every N steps");
  cmd_train->add_option("--seed", train_cfg.seed, "training seed");
  cmd_train->add_option("--loss", loss_list, "enabled loss terms, e.g. ed,rd,mlm");
  cmd_train->add_option("--rd-scope", rd_scope, "RD positive scope: all|single|cross")
      ->check(CLI::IsMember({"all", "single", "cross"}));
  cmd_train->add_option("--repr", repr_mode, "entity representation: mean|marker")
      ->check(CLI::IsMember({"mean", "marker"}));
  cmd_train->add_option("--resume", resume_path, "resume from checkpoint");
  cmd_train->add_option("--out", out_dir, "output directory");

  // ---- probe --------------------------------------------------------
  auto* cmd_probe = app.add_subcommand(
      "probe", "frozen-encoder relation/typing probes and cluster metrics");
  std::string probe_planted, probe_ckpt, probe_which = "all";
  int probe_epochs = 60;
  std::uint64_t probe_seed = 1;
  cmd_probe->add_option("--planted", probe_planted, "planted corpus directory")
      ->required();
  cmd_probe->add_option("--checkpoint", probe_ckpt, "checkpoint file")->required();
  cmd_probe->add_option("--which", probe_which, "relation|typing|cluster|all")
      ->check(CLI::IsMember({"relation", "typing", "cluster", "all"}));
  cmd_probe->add_option("--epochs", probe_epochs, "probe training epochs");
  cmd_probe->add_option("--seed", probe_seed, "probe seed");
  cmd_probe->add_option("--out", out_dir, "output directory");

  // ---- export-embeddings -------------------------------------------
  auto* cmd_export = app.add_subcommand(
      "export-embeddings", "dump entity and relation embeddings as CSV");
  std::string export_planted, export_ckpt;
  cmd_export->add_option("--planted", export_planted, "planted corpus directory")
      ->required();
  cmd_export->add_option("--checkpoint", export_ckpt, "checkpoint file")->required();
  cmd_export->add_option("--out", out_dir, "output directory");

  // ---- gradcheck ----------------------------------------------------
  auto* cmd_grad = app.add_subcommand(
      "gradcheck", "finite-difference verification of all loss gradients");
  GradCheckOptions grad_opts;
  cmd_grad->add_option("--seed", grad_opts.seed, "suite seed");
  cmd_grad->add_option("--instances", grad_opts.instances, "instances per suite");
  cmd_grad->add_option("--tolerance", grad_opts.tolerance, "max relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    std::cerr << e.what() << "\n\n" << app.help() << std::endl;
    return 2;
  }

  try {
    if (*cmd_build) {
      fs::create_directories(out_dir);
      KnowledgeBase kb;
      std::vector<ParseIssue> issues;
      FilteredCorpus corpus = build_args.load(kb, &issues);
      for (const auto& issue : issues)
        std::cerr << "parse error at line " << issue.line
                  << (issue.doc_id.empty() ? "" : " (doc " + issue.doc_id + ")")
                  << ": " << issue.message << "\n";
      const CorpusStats stats = corpus_stats(corpus.documents, corpus.triple_sets);
      write_file(out_dir + "/stats.txt", stats_to_text(stats));
      write_file(out_dir + "/stats.csv", stats_to_csv(stats));
      json cfg = {{"min_words", build_args.min_words},
                  {"min_entities", build_args.min_entities},
                  {"min_triples", build_args.min_triples},
                  {"fraction", build_args.fraction}};
      write_run_manifest(out_dir, "build-corpus", cfg, build_args.input_files());
      std::cout << stats_to_text(stats);
      return 0;
    }

    if (*cmd_gen) {
      PlantedCorpus corpus =
          generate_planted_corpus(gen_relations, gen_entities, gen_docs, gen_seed);
      save_planted(corpus, out_dir);
      json cfg = {{"relations", gen_relations},
                  {"entities", gen_entities},
                  {"docs", gen_docs},
                  {"seed", gen_seed}};
      write_run_manifest(out_dir, "gen-planted", cfg,
                         {out_dir + "/corpus.jsonl", out_dir + "/kb.tsv"});
      std::cout << "generated " << corpus.documents.size() << " documents ("
                << corpus.train_doc_ids.size() << " train, "
                << corpus.test_doc_ids.size() << " test) into " << out_dir << "\n";
      return 0;
    }

    if (*cmd_train) {
      fs::create_directories(out_dir);
      train_cfg.loss_ed = loss_list.find("ed") != std::string::npos;
      train_cfg.loss_rd = loss_list.find("rd") != std::string::npos;
      train_cfg.loss_mlm = loss_list.find("mlm") != std::string::npos;
      train_cfg.rd_scope = rd_scope == "all" ? PairScope::all
                           : rd_scope == "single" ? PairScope::single_sentence
                                                  : PairScope::cross_sentence;
      train_cfg.repr_mode =
          repr_mode == "mean" ? ReprMode::mean_pool : ReprMode::entity_marker;

      KnowledgeBase kb;
      FilteredCorpus corpus = train_corpus_args.load(kb, nullptr);
      if (corpus.documents.empty())
        throw std::runtime_error("no documents survive the corpus filters");
      Vocabulary vocab = vocab_from_documents(corpus.documents);
      enc_cfg.vocab_size = static_cast<std::size_t>(vocab.size());
      vocab.save(out_dir + "/vocab.txt");

      std::optional<Checkpoint> resume;
      if (!resume_path.empty()) {
        resume = load_checkpoint(resume_path);
        enc_cfg = resume->enc_cfg;
      }
      TrainResult result =
          train(corpus, kb, vocab, enc_cfg, train_cfg, resume, out_dir);
      write_file(out_dir + "/metrics.csv", metrics_to_csv(result.metrics));
      write_run_manifest(out_dir, "pretrain", train_config_json(enc_cfg, train_cfg),
                         train_corpus_args.input_files());
      std::cout << "trained to step " << result.checkpoint.step
                << "; final checkpoint in " << out_dir << "\n";
      return 0;
    }

    if (*cmd_probe) {
      fs::create_directories(out_dir);
      PlantedCorpus corpus = load_planted(probe_planted);
      Checkpoint ckpt = load_checkpoint(probe_ckpt);
      const Vocabulary vocab = planted_vocabulary(corpus);
      if (vocab.hash() != ckpt.vocab_hash)
        throw std::runtime_error(
            "checkpoint vocabulary does not match the planted corpus");
      ProbeOptions opts;
      opts.epochs = probe_epochs;
      opts.seed = probe_seed;

      std::ostringstream report;
      report << "probe,checkpoint,metric,value\n";
      auto emit = [&](const std::string& probe, const std::string& metric,
                      double value) {
        report << probe << "," << probe_ckpt << "," << metric << "," << value << "\n";
      };
      if (probe_which == "relation" || probe_which == "all") {
        const auto r = fit_relation_probe(ckpt.enc_cfg, ckpt.params, corpus, opts);
        emit("relation", "accuracy", r.accuracy);
        emit("relation", "micro_f1", r.micro_f1);
        emit("relation", "macro_f1", r.macro_f1);
      }
      if (probe_which == "typing" || probe_which == "all") {
        const auto r = fit_typing_probe(ckpt.enc_cfg, ckpt.params, corpus, opts);
        emit("typing", "micro_f1", r.micro_f1);
        emit("typing", "macro_f1", r.macro_f1);
      }
      if (probe_which == "cluster" || probe_which == "all") {
        std::vector<std::vector<double>> points;
        std::vector<std::string> labels;
        for (const auto& row : export_embeddings(ckpt.enc_cfg, ckpt.params, corpus)) {
          if (row.kind != "relation") continue;
          if (corpus.is_train(row.doc_id)) continue;
          points.push_back(row.vec);
          labels.push_back(row.label);
        }
        const auto m = cluster_metrics(points, labels);
        emit("cluster", "silhouette", m.silhouette);
        emit("cluster", "nn_accuracy", m.nn_accuracy);
      }
      write_file(out_dir + "/probe_report.csv", report.str());
      json cfg = {{"which", probe_which}, {"epochs", probe_epochs}, {"seed", probe_seed}};
      write_run_manifest(out_dir, "probe", cfg, {probe_ckpt});
      std::cout << report.str();
      return 0;
    }

    if (*cmd_export) {
      fs::create_directories(out_dir);
      PlantedCorpus corpus = load_planted(export_planted);
      Checkpoint ckpt = load_checkpoint(export_ckpt);
      const Vocabulary vocab = planted_vocabulary(corpus);
      if (vocab.hash() != ckpt.vocab_hash)
        throw std::runtime_error(
            "checkpoint vocabulary does not match the planted corpus");
      const auto rows = export_embeddings(ckpt.enc_cfg, ckpt.params, corpus);
      write_file(out_dir + "/embeddings.csv", embeddings_to_csv(rows));
      write_run_manifest(out_dir, "export-embeddings", json::object(), {export_ckpt});
      std::cout << "wrote " << rows.size() << " embedding rows\n";
      return 0;
    }

    if (*cmd_grad) {
      const auto report = run_gradcheck(grad_opts);
      std::cout << report.summary() << "\n";
      if (!report.pass(grad_opts.tolerance)) {
        std::cerr << "gradcheck failed tolerance " << grad_opts.tolerance << "\n";
        return 1;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
