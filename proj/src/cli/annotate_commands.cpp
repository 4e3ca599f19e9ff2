#include <atomic>
#include <csignal>
#include <memory>
#include <pthread.h>
#include <thread>

#include "commands.hpp"
#include "novelty/annotate/analysis.hpp"
#include "novelty/annotate/export.hpp"
#include "novelty/service/http.hpp"
#include "novelty/util/error.hpp"

namespace novelty::cli {
namespace {

annotate::Store open_existing(const std::string& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::kNotFound, "no store at " + path, "--store");
  return annotate::Store::open(path);
}

void add_import(CLI::App* group, std::vector<Command>& commands) {
  struct Opts {
    std::string store, dir, batches, ratings, highlights;
  };
  auto o = std::make_shared<Opts>();
  auto* c = group->add_subcommand("import", "Load passages, batches and records into a store");
  c->add_option("--store", o->store, "Store file")->required()->envname("NOVELTY_STORE");
  c->add_option("--dir", o->dir, "Segment output or export directory; the store must be empty")
      ->check(CLI::ExistingDirectory);
  c->add_option("--batches", o->batches, "Batch records")->check(CLI::ExistingFile);
  c->add_option("--ratings", o->ratings, "Rating submissions, validated one by one")->check(CLI::ExistingFile);
  c->add_option("--highlights", o->highlights, "Highlight submissions, validated one by one")
      ->check(CLI::ExistingFile);
  commands.push_back({c, [o](Context& ctx) {
    auto store = annotate::Store::open(o->store);
    if (!o->dir.empty()) {
      auto d = annotate::import_dataset(o->dir);
      ctx.input_digest(o->dir, dataset_digest(d));
      if (!store.empty()) fail(ErrorCode::kConflict, "store " + o->store + " is not empty", "--store");
      store.restore(d);
    }
    if (!o->batches.empty()) {
      ctx.input(o->batches);
      for (const auto& j : io::read_versioned_jsonl(o->batches, "novelty.batches")) {
        auto b = annotate::batch_from_json(j);
        annotate::validate(b);
        store.put_batch(b);
      }
    }
    if (!o->ratings.empty()) {
      ctx.input(o->ratings);
      for (const auto& j : io::read_versioned_jsonl(o->ratings, "novelty.ratings")) {
        store.record_rating(annotate::rating_from_json(j));
      }
    }
    if (!o->highlights.empty()) {
      ctx.input(o->highlights);
      for (const auto& j : io::read_versioned_jsonl(o->highlights, "novelty.highlights")) {
        store.record_highlight(annotate::highlight_from_json(j));
      }
    }
    ctx.manifest_beside(o->store);
    ctx.out << pretty(annotate::to_json(annotate::summarize(store.snapshot())));
  }});
}

void add_export(CLI::App* group, std::vector<Command>& commands) {
  struct Opts {
    std::string store, out;
  };
  auto o = std::make_shared<Opts>();
  auto* c = group->add_subcommand("export", "Write every store table as versioned record files");
  c->add_option("--store", o->store, "Store file")->required()->envname("NOVELTY_STORE");
  c->add_option("--out", o->out, "Output directory")->required();
  commands.push_back({c, [o](Context& ctx) {
    const auto d = open_existing(o->store).snapshot();
    ctx.input_digest(o->store, dataset_digest(d));
    const auto summary = annotate::export_dataset(d, o->out);
    ctx.output_dir(o->out);
    ctx.manifest_in_dir(o->out);
    ctx.out << pretty(annotate::to_json(summary));
  }});
}

void add_kappa(CLI::App* group, std::vector<Command>& commands) {
  struct Opts {
    DatasetSource source;
    std::string batch, dimension = "novel", out;
  };
  auto o = std::make_shared<Opts>();
  auto* c = group->add_subcommand("kappa", "Free-marginal agreement for one batch or all batches");
  o->source.add_options(*c);
  c->add_option("--batch", o->batch, "Batch id; omit for the summary over all batches");
  c->add_option("--dimension", o->dimension, "Rated dimension")->check(CLI::IsMember({"sensical", "pragmatic", "novel"}));
  c->add_option("--out", o->out, "Also write the report here");
  commands.push_back({c, [o](Context& ctx) {
    const auto d = o->source.load(ctx);
    const auto dim = annotate::parse_dimension(o->dimension);
    const auto report = o->batch.empty() ? annotate::to_json(annotate::kappa_summary(d, dim))
                                         : annotate::to_json(annotate::batch_kappa(d, o->batch, dim));
    if (!o->out.empty()) {
      io::write_file(o->out, pretty(report));
      ctx.output(o->out);
      ctx.manifest_beside(o->out);
    }
    ctx.out << pretty(report);
  }});
}

void add_serve(CLI::App* group, std::vector<Command>& commands) {
  struct Opts {
    std::string store, host = "127.0.0.1", secret;
    int port = 8080;
  };
  auto o = std::make_shared<Opts>();
  auto* c = group->add_subcommand("serve", "Serve the /v1 annotation API until interrupted");
  c->add_option("--store", o->store, "Store file")->required()->envname("NOVELTY_STORE");
  c->add_option("--host", o->host, "Bind address");
  c->add_option("--port", o->port, "Port; 0 picks a free one")->check(CLI::Range(0, 65535));
  c->add_option("--secret", o->secret, "Token signing secret")->required()->envname("NOVELTY_SECRET");
  commands.push_back({c, [o](Context& ctx) {
    auto store = open_existing(o->store);
    service::AnnotationService svc(store, service::TokenIssuer(o->secret));
    service::HttpServer server(svc);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    sigset_t previous;
    pthread_sigmask(SIG_BLOCK, &signals, &previous);
    const int port = server.bind({o->host, o->port});
    ctx.err << io::Json({{"level", "info"}, {"event", "listening"}, {"host", o->host}, {"port", port}}).dump()
            << std::endl;
    std::atomic<bool> signalled{false};
    std::thread waiter([&] {
      int sig = 0;
      sigwait(&signals, &sig);
      signalled = true;
      server.stop();
    });
    server.listen();
    if (!signalled) pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  }});
}

void add_token(CLI::App* group, std::vector<Command>& commands) {
  struct Opts {
    std::string secret, annotator;
    std::int64_t ttl = 86400;
    std::int64_t expires_at = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* c = group->add_subcommand("token", "Issue an annotator token");
  c->add_option("--secret", o->secret, "Token signing secret")->required()->envname("NOVELTY_SECRET");
  c->add_option("--annotator", o->annotator, "Annotator id")->required();
  c->add_option("--ttl", o->ttl, "Seconds until expiry");
  c->add_option("--expires-at", o->expires_at, "Absolute expiry (epoch seconds); overrides --ttl");
  commands.push_back({c, [o](Context& ctx) {
    const std::int64_t expiry = o->expires_at > 0 ? o->expires_at : service::system_now() + o->ttl;
    ctx.out << service::TokenIssuer(o->secret).issue(o->annotator, expiry) << "\n";
  }});
}

}  // namespace

void DatasetSource::add_options(CLI::App& app) {
  app.add_option("--store", store, "Store file")->envname("NOVELTY_STORE");
  app.add_option("--dataset", dir, "Export directory; takes precedence over --store")
      ->check(CLI::ExistingDirectory);
}

annotate::Dataset DatasetSource::load(Context& ctx) const {
  annotate::Dataset d;
  if (!dir.empty()) {
    d = annotate::import_dataset(dir);
    ctx.input_digest(dir, dataset_digest(d));
  } else if (!store.empty()) {
    d = open_existing(store).snapshot();
    ctx.input_digest(store, dataset_digest(d));
  } else {
    fail(ErrorCode::kArgument, "--store or --dataset is required", "--store");
  }
  return d;
}

std::string dataset_digest(const annotate::Dataset& d) {
  std::string blob;
  auto add = [&](const io::Json& j) { blob += j.dump() + "\n"; };
  for (const auto& p : d.passages) add(segment::to_json(p));
  for (const auto& e : d.expressions) add(annotate::expression_record(e));
  for (const auto& p : d.profiles) add(segment::to_json(p));
  for (const auto& b : d.batches) add(annotate::to_json(b));
  for (const auto& r : d.ratings) add(annotate::to_json(r));
  for (const auto& h : d.highlights) add(annotate::to_json(h));
  return io::sha256_hex(blob);
}

void add_annotate_commands(CLI::App& root, std::vector<Command>& commands) {
  auto* group = root.add_subcommand("annotate", "Annotation store, service and exports");
  group->require_subcommand(1);
  add_serve(group, commands);
  add_import(group, commands);
  add_export(group, commands);
  add_kappa(group, commands);
  add_token(group, commands);
}

}  // namespace novelty::cli
