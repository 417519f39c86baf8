#pragma once

#include <condition_variable>
#include <deque>
#include <mutex>
#include <ostream>
#include <thread>
#include <variant>
#include <vector>

#include "nystrom/common.hpp"
#include "nystrom/dataset.hpp"
#include "nystrom/kernel.hpp"
#include "nystrom/oasis.hpp"

namespace nystrom {

// Distributed variant of the sampler, simulated in-process: p shared-nothing
// workers each own a contiguous block of the dataset plus their row slices of
// C/R/d and a full W^-1 replica. A coordinator drives bulk-synchronous rounds
// and only small messages cross worker boundaries: each round gathers one
// candidate (index, score, owning point) per worker and broadcasts the winning
// point, so per-round traffic is O(p(m+k)). The full column blocks travel only
// in the final gather. Selection and updates reuse the serial arithmetic
// kernels, so the chosen index sequence matches a serial run exactly.

/// One worker's share: local points, local slices of C/R/d, replicated W^-1
/// and selected points.
struct WorkerPartition {
  int worker_id = 0;
  Index global_start = 0;
  Matrix z_block;  // m x n_local

  KernelSpec spec;
  Index max_columns = 0;
  Index k = 0;

  Vector d_block;
  Matrix c_block;   // n_local x max_columns, leading k columns live
  Matrix r_block;   // R^T slice, n_local x max_columns, leading k columns live
  Matrix winv;      // max_columns x max_columns replica, leading k x k live
  Matrix z_lambda;  // m x max_columns replica of selected points
  std::vector<Index> lambda;        // global indices, replicated
  std::vector<char> selected_local; // mask over the local block

  Index local_size() const { return z_block.cols(); }

  bool owns(Index global) const {
    return global >= global_start && global < global_start + local_size();
  }

  /// Instrumented element count of everything resident on this worker.
  Index resident_elements() const {
    return static_cast<Index>(z_block.size() + d_block.size() + c_block.size() +
                              r_block.size() + winv.size() + z_lambda.size()) +
           static_cast<Index>(lambda.size() + selected_local.size());
  }
};

/// Contiguous column blocks, sizes differing by at most one (remainder spread
/// over the leading blocks).
inline std::vector<WorkerPartition> partition(const Dataset& dataset, int p) {
  const Index n = dataset.size();
  if (p < 1 || static_cast<Index>(p) > n) {
    throw std::invalid_argument("partition: need 1 <= p <= n");
  }
  std::vector<WorkerPartition> parts(static_cast<std::size_t>(p));
  const Index base = n / p;
  const Index rem = n % p;
  Index start = 0;
  for (int w = 0; w < p; ++w) {
    const Index count = base + (static_cast<Index>(w) < rem ? 1 : 0);
    auto& part = parts[static_cast<std::size_t>(w)];
    part.worker_id = w;
    part.global_start = start;
    part.z_block = dataset.points().middleCols(start, count);
    start += count;
  }
  return parts;
}

// Message types. Payload accounting feeds the traffic audit.

struct InitBroadcast {
  std::vector<Index> seed_indices;
  Matrix seed_points;  // m x k0
  KernelSpec spec;
  Index max_columns = 0;
};

struct InitAck {
  int worker_id = 0;
  double d_max = 0.0;
};

/// One worker's local argmax candidate; index < 0 means the whole block is
/// already selected.
struct DeltaGather {
  int worker_id = 0;
  Index best_index = -1;  // global
  double best_delta = 0.0;  // signed
  Vector best_point;
};

struct SelectionBroadcast {
  Index global_index = -1;
  Vector point;
  double delta = 0.0;  // signed; s = 1/delta
};

struct FinalGatherRequest {};

struct FinalGatherReply {
  int worker_id = 0;
  Matrix c_block;
  Matrix winv;
};

inline std::size_t payload_bytes(const InitBroadcast& m) {
  return 16 + 8 * (m.seed_indices.size() + static_cast<std::size_t>(m.seed_points.size()) + 2);
}
inline std::size_t payload_bytes(const InitAck&) { return 16 + 8; }
inline std::size_t payload_bytes(const DeltaGather& m) {
  return 16 + 8 * (2 + static_cast<std::size_t>(m.best_point.size()));
}
inline std::size_t payload_bytes(const SelectionBroadcast& m) {
  return 16 + 8 * (2 + static_cast<std::size_t>(m.point.size()));
}
inline std::size_t payload_bytes(const FinalGatherRequest&) { return 16; }
inline std::size_t payload_bytes(const FinalGatherReply& m) {
  return 16 + 8 * static_cast<std::size_t>(m.c_block.size() + m.winv.size());
}

struct MessageRecord {
  std::string kind;
  int round = 0;
  int worker = 0;
  std::size_t bytes = 0;

  bool operator==(const MessageRecord&) const = default;
};

/// Append-only log of every simulated message; JSON lines via write_jsonl.
class MessageLog {
 public:
  void add(std::string kind, int round, int worker, std::size_t bytes) {
    records_.push_back({std::move(kind), round, worker, bytes});
  }
  const std::vector<MessageRecord>& records() const { return records_; }

  void write_jsonl(std::ostream& out) const {
    for (const auto& rec : records_) {
      out << "{\"kind\":\"" << rec.kind << "\",\"round\":" << rec.round
          << ",\"worker\":" << rec.worker << ",\"bytes\":" << rec.bytes << "}\n";
    }
  }

 private:
  std::vector<MessageRecord> records_;
};

/// Builds the worker-local state from the seed broadcast.
inline InitAck worker_init(WorkerPartition& part, const InitBroadcast& msg) {
  msg.spec.validate();
  part.spec = msg.spec;
  part.max_columns = msg.max_columns;
  const Index nl = part.local_size();
  const Index l = msg.max_columns;
  const Index k0 = static_cast<Index>(msg.seed_indices.size());
  const Index m = part.z_block.rows();

  part.d_block.resize(nl);
  for (Index j = 0; j < nl; ++j) {
    part.d_block[j] = detail::eval_kernel(part.spec, part.z_block.col(j), part.z_block.col(j));
  }

  part.c_block.setZero(nl, l);
  for (Index t = 0; t < k0; ++t) {
    for (Index j = 0; j < nl; ++j) {
      part.c_block(j, t) = detail::eval_kernel(part.spec, part.z_block.col(j), msg.seed_points.col(t));
    }
  }

  Matrix w0(k0, k0);
  for (Index t = 0; t < k0; ++t) {
    for (Index u = 0; u < k0; ++u) {
      w0(t, u) = detail::eval_kernel(part.spec, msg.seed_points.col(t), msg.seed_points.col(u));
    }
  }
  part.winv.setZero(l, l);
  part.winv.topLeftCorner(k0, k0) = detail::symmetric_inverse(w0);

  part.r_block.setZero(nl, l);
  detail::initial_rt(part.winv.topLeftCorner(k0, k0), part.c_block.leftCols(k0),
                     part.r_block.leftCols(k0));

  part.z_lambda.setZero(m, l);
  part.z_lambda.leftCols(k0) = msg.seed_points;
  part.lambda = msg.seed_indices;
  part.selected_local.assign(static_cast<std::size_t>(nl), 0);
  for (Index idx : msg.seed_indices) {
    if (part.owns(idx)) part.selected_local[static_cast<std::size_t>(idx - part.global_start)] = 1;
  }
  part.k = k0;
  return {part.worker_id, part.d_block.cwiseAbs().maxCoeff()};
}

/// Local slice of the score vector; concatenating the slices over workers
/// reproduces the serial scores.
inline Vector worker_delta(const WorkerPartition& part) {
  Vector out(part.local_size());
  detail::schur_scores(part.c_block.leftCols(part.k), part.r_block.leftCols(part.k),
                       part.d_block, out);
  return out;
}

/// Reduces the local scores to this worker's candidate: largest |Delta| over
/// unselected local indices, lowest index on ties.
inline DeltaGather worker_candidate(const WorkerPartition& part) {
  const Vector delta = worker_delta(part);
  DeltaGather out;
  out.worker_id = part.worker_id;
  double best_abs = -1.0;
  Index best_local = -1;
  for (Index j = 0; j < delta.size(); ++j) {
    if (part.selected_local[static_cast<std::size_t>(j)]) continue;
    const double a = std::abs(delta[j]);
    if (a > best_abs) {
      best_abs = a;
      best_local = j;
    }
  }
  if (best_local >= 0) {
    out.best_index = part.global_start + best_local;
    out.best_delta = delta[best_local];
    out.best_point = part.z_block.col(best_local);
  }
  return out;
}

/// Applies the coordinator's argmax + tie-break (the serial select_next rule)
/// to the gathered candidates.
inline std::variant<SelectionBroadcast, Termination> coordinate_selection(
    const std::vector<DeltaGather>& candidates, const std::vector<Index>& lambda, double eps) {
  const DeltaGather* best = nullptr;
  for (const auto& cand : candidates) {
    if (cand.best_index < 0) continue;
    for (Index idx : lambda) {
      if (idx == cand.best_index) {
        throw std::logic_error("coordinate_selection: candidate already selected");
      }
    }
    if (!best || std::abs(cand.best_delta) > std::abs(best->best_delta) ||
        (std::abs(cand.best_delta) == std::abs(best->best_delta) &&
         cand.best_index < best->best_index)) {
      best = &cand;
    }
  }
  if (!best) return Termination::exhausted;
  if (std::abs(best->best_delta) < eps) return Termination::tolerance;
  return SelectionBroadcast{best->best_index, best->best_point, best->best_delta};
}

/// One selection round on a worker: local kernel slice against the broadcast
/// point, then the shared W^-1 / R update kernels on the local views.
inline void worker_apply_selection(WorkerPartition& part, const SelectionBroadcast& msg) {
  const Index k = part.k;
  if (k >= part.max_columns) throw std::logic_error("worker_apply_selection: column cap reached");
  const Index nl = part.local_size();

  Vector c_new(nl);
  for (Index j = 0; j < nl; ++j) {
    c_new[j] = detail::eval_kernel(part.spec, part.z_block.col(j), msg.point);
  }
  Vector b(k);
  for (Index t = 0; t < k; ++t) {
    b[t] = detail::eval_kernel(part.spec, part.z_lambda.col(t), msg.point);
  }
  const Vector q = part.winv.topLeftCorner(k, k) * b;
  const double s = 1.0 / msg.delta;

  detail::schur_update_inplace(part.winv.topLeftCorner(k + 1, k + 1), q, s);
  detail::update_rt_inplace(part.r_block.leftCols(k + 1), part.c_block.leftCols(k), c_new, q, s);
  part.c_block.col(k) = c_new;
  part.z_lambda.col(k) = msg.point;
  part.lambda.push_back(msg.global_index);
  if (part.owns(msg.global_index)) {
    part.selected_local[static_cast<std::size_t>(msg.global_index - part.global_start)] = 1;
  }
  ++part.k;
}

namespace detail {

template <typename T>
class SyncQueue {
 public:
  void push(T msg) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      queue_.push_back(std::move(msg));
    }
    ready_.notify_one();
  }

  T pop() {
    std::unique_lock<std::mutex> lock(mutex_);
    ready_.wait(lock, [&] { return !queue_.empty(); });
    T msg = std::move(queue_.front());
    queue_.pop_front();
    return msg;
  }

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<T> queue_;
};

using CoordMessage = std::variant<InitBroadcast, SelectionBroadcast, FinalGatherRequest>;
using WorkerMessage = std::variant<InitAck, DeltaGather, FinalGatherReply>;

}  // namespace detail

/// Runs the sampler across `workers` simulated nodes; the selected index
/// sequence and the returned C/W^-1 match a serial oasis_run with the same
/// config. Implicit kernels only (workers evaluate the kernel locally).
inline OasisResult oasis_p_run(const Dataset& dataset, const KernelSpec& spec,
                               const OasisConfig& config, int workers, MessageLog* log = nullptr,
                               const StepCallback& on_step = {}) {
  spec.validate();
  if (spec.kind == KernelKind::diffusion_gaussian) {
    throw std::invalid_argument("oasis_p_run: needs an implicit kernel (gaussian or gram)");
  }
  const Index n = dataset.size();
  config.validate(n);
  if (workers < 1 || static_cast<Index>(workers) > n) {
    throw std::invalid_argument("oasis_p_run: need 1 <= workers <= n");
  }
  const Index l = config.max_columns;
  const Index k0 = config.init_columns;
  const Index m = dataset.dim();

  Stopwatch clock;
  auto parts = partition(dataset, workers);
  if (log) {
    for (const auto& part : parts) {
      log->add("data-load", 0, part.worker_id,
               16 + 8 * static_cast<std::size_t>(part.z_block.size()));
    }
  }

  // Seed draw mirrors the serial path: same RNG stream, same conditioning
  // check, same redraw sequence.
  std::mt19937_64 rng(config.seed);
  std::vector<Index> seeds;
  bool seeded = false;
  for (int attempt = 0; attempt < 10 && !seeded; ++attempt) {
    seeds = detail::draw_initial_indices(n, k0, rng);
    Matrix w0(k0, k0);
    for (Index t = 0; t < k0; ++t) {
      for (Index u = 0; u < k0; ++u) {
        w0(t, u) = detail::eval_kernel(spec, dataset.point(seeds[static_cast<std::size_t>(t)]),
                                       dataset.point(seeds[static_cast<std::size_t>(u)]));
      }
    }
    seeded = detail::invertible_block(w0);
  }
  if (!seeded) {
    throw std::runtime_error("oasis_p_run: initial column block stayed numerically singular "
                             "after 10 draws; reduce init_columns");
  }
  Matrix seed_points(m, k0);
  for (Index t = 0; t < k0; ++t) seed_points.col(t) = dataset.point(seeds[static_cast<std::size_t>(t)]);

  std::vector<detail::SyncQueue<detail::CoordMessage>> inboxes(static_cast<std::size_t>(workers));
  detail::SyncQueue<detail::WorkerMessage> coordinator_inbox;

  std::vector<std::jthread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      auto& part = parts[static_cast<std::size_t>(w)];
      auto& inbox = inboxes[static_cast<std::size_t>(w)];
      for (;;) {
        detail::CoordMessage msg = inbox.pop();
        if (std::holds_alternative<InitBroadcast>(msg)) {
          coordinator_inbox.push(worker_init(part, std::get<InitBroadcast>(msg)));
          if (part.k < part.max_columns) coordinator_inbox.push(worker_candidate(part));
        } else if (std::holds_alternative<SelectionBroadcast>(msg)) {
          worker_apply_selection(part, std::get<SelectionBroadcast>(msg));
          if (part.k < part.max_columns) coordinator_inbox.push(worker_candidate(part));
        } else {
          FinalGatherReply reply;
          reply.worker_id = part.worker_id;
          reply.c_block = part.c_block.leftCols(part.k);
          reply.winv = part.winv.topLeftCorner(part.k, part.k);
          coordinator_inbox.push(std::move(reply));
          return;
        }
      }
    });
  }

  // Worker replies of different kinds interleave in the shared inbox (a
  // worker follows its init ack with its first candidate immediately), so the
  // coordinator demultiplexes by kind. Per-worker FIFO order plus the
  // gather-all-before-next-round structure keeps every buffered candidate in
  // the current round.
  std::deque<InitAck> pending_acks;
  std::deque<DeltaGather> pending_candidates;
  std::deque<FinalGatherReply> pending_replies;
  auto pump = [&](auto& bucket, std::size_t need) {
    while (bucket.size() < need) {
      detail::WorkerMessage msg = coordinator_inbox.pop();
      if (std::holds_alternative<InitAck>(msg)) {
        pending_acks.push_back(std::get<InitAck>(std::move(msg)));
      } else if (std::holds_alternative<DeltaGather>(msg)) {
        pending_candidates.push_back(std::get<DeltaGather>(std::move(msg)));
      } else {
        pending_replies.push_back(std::get<FinalGatherReply>(std::move(msg)));
      }
    }
  };

  InitBroadcast init{seeds, seed_points, spec, l};
  for (int w = 0; w < workers; ++w) {
    if (log) log->add("init-broadcast", 0, w, payload_bytes(init));
    inboxes[static_cast<std::size_t>(w)].push(init);
  }
  pump(pending_acks, static_cast<std::size_t>(workers));
  std::vector<InitAck> acks(static_cast<std::size_t>(workers));
  for (auto& ack : pending_acks) acks[static_cast<std::size_t>(ack.worker_id)] = ack;
  pending_acks.clear();
  double d_scale = 0.0;
  for (const auto& ack : acks) {
    if (log) log->add("init-ack", 0, ack.worker_id, payload_bytes(ack));
    d_scale = std::max(d_scale, ack.d_max);
  }
  const double eps = config.tolerance ? *config.tolerance : 1e-8 * d_scale;

  OasisResult result;
  result.reason = Termination::column_cap;
  std::vector<Index> lambda = seeds;
  Index k = k0;
  int round = 0;
  while (k < l) {
    ++round;
    pump(pending_candidates, static_cast<std::size_t>(workers));
    std::vector<DeltaGather> candidates(static_cast<std::size_t>(workers));
    for (auto& cand : pending_candidates) {
      candidates[static_cast<std::size_t>(cand.worker_id)] = std::move(cand);
    }
    pending_candidates.clear();
    if (log) {
      for (const auto& cand : candidates) {
        log->add("delta-gather", round, cand.worker_id, payload_bytes(cand));
      }
    }
    auto decision = coordinate_selection(candidates, lambda, eps);
    if (std::holds_alternative<Termination>(decision)) {
      result.reason = std::get<Termination>(decision);
      break;
    }
    const auto& sel = std::get<SelectionBroadcast>(decision);
    // Same pivot guard as the serial loop; d_i regenerates bit-equal from the
    // candidate's point.
    const double diag_i = detail::eval_kernel(spec, sel.point, sel.point);
    if (std::abs(sel.delta) < detail::pivot_floor(diag_i)) {
      result.reason = Termination::tolerance;
      break;
    }
    if (sel.delta < -1e-6 * d_scale) result.psd_warning = true;
    lambda.push_back(sel.global_index);
    ++k;
    for (int w = 0; w < workers; ++w) {
      if (log) log->add("selection-broadcast", round, w, payload_bytes(sel));
      inboxes[static_cast<std::size_t>(w)].push(sel);
    }
    if (on_step) on_step({k, sel.global_index, std::abs(sel.delta), clock.seconds()});
  }

  // Workers that already sent a candidate for a round the coordinator never
  // resolved (tolerance stop) have nothing pending; workers stop sending at
  // the cap on their own. Collect the blocks.
  ++round;
  for (int w = 0; w < workers; ++w) {
    if (log) log->add("final-gather-request", round, w, payload_bytes(FinalGatherRequest{}));
    inboxes[static_cast<std::size_t>(w)].push(FinalGatherRequest{});
  }
  pump(pending_replies, static_cast<std::size_t>(workers));
  std::vector<FinalGatherReply> replies(static_cast<std::size_t>(workers));
  for (auto& reply : pending_replies) {
    replies[static_cast<std::size_t>(reply.worker_id)] = std::move(reply);
  }
  pending_replies.clear();
  for (const auto& reply : replies) {
    if (log) log->add("final-gather-reply", round, reply.worker_id, payload_bytes(reply));
  }
  threads.clear();  // join

  Matrix c(n, k);
  for (int w = 0; w < workers; ++w) {
    const auto& part = parts[static_cast<std::size_t>(w)];
    c.middleRows(part.global_start, part.local_size()) =
        replies[static_cast<std::size_t>(w)].c_block;
  }
  // All replicas are identical by construction; worker 0's is the output.
  result.approx = NystromApprox(lambda, std::move(c), replies.front().winv);
  result.selection_seconds = clock.seconds();
  return result;
}

}  // namespace nystrom
