// protocol.hpp -- the ScenarioLoader: a sealed state machine mediating every
// trainer <-> benchmark exchange. Trainers receive the current task's visible
// input together with the full query list (every round, including queries on
// unseen tasks), hand back an answer sheet covering exactly those queries,
// and never learn anything about correctness. Ground truth stays inside the
// loader; evaluation writes one matrix row per submitted round.

#pragma once

#include "grapal/metrics.hpp"
#include "grapal/report.hpp"
#include "grapal/scenario.hpp"

#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace grapal {

struct Answer {
  enum class Kind { class_index, score };
  Kind kind = Kind::class_index;
  int cls = 0;
  double score = 0;

  static Answer of_class(int c) { return {Kind::class_index, c, 0}; }
  static Answer of_score(double s) { return {Kind::score, 0, s}; }
};

class AnswerSheet {
 public:
  void set_class(i64 query_id, int cls) { entries_[query_id] = Answer::of_class(cls); }
  void set_score(i64 query_id, double score) { entries_[query_id] = Answer::of_score(score); }
  size_t size() const { return entries_.size(); }
  const std::map<i64, Answer>& entries() const { return entries_; }

 private:
  std::map<i64, Answer> entries_;
};

// Everything the trainer sees for one round.
struct TaskInput {
  int task_index = 0;
  int num_tasks = 0;
  Setting setting = Setting::task_il;
  Level level = Level::node;
  int total_classes = 0;
  TaskVisible visible;
  std::vector<Query> queries;  // the full query list, every round
};

struct Ack {
  int round = 0;  // nothing about correctness is ever returned
};

class ScenarioLoader {
 public:
  explicit ScenarioLoader(std::shared_ptr<const Scenario> scenario)
      : scenario_(std::move(scenario)) {
    const MetricConfig& mc = scenario_->metrics();
    if (scenario_->level() == Level::link_prediction) {
      matrices_.emplace(mc.primary, PerformanceMatrix(scenario_->num_tasks(), mc.primary));
      matrices_.emplace("auroc", PerformanceMatrix(scenario_->num_tasks(), "auroc"));
    } else {
      matrices_.emplace("accuracy", PerformanceMatrix(scenario_->num_tasks(), "accuracy"));
    }
  }

  bool finished() const { return cursor_ >= scenario_->num_tasks(); }

  // Returns the next task's input, or nullopt once all tasks are done.
  std::optional<TaskInput> next_task() {
    if (awaiting_answers_) throw ProtocolError("next_task called before submit_answers");
    if (finished()) return std::nullopt;
    const TaskSpec& spec = scenario_->tasks()[static_cast<size_t>(cursor_)];
    TaskInput input;
    input.task_index = spec.index;
    input.num_tasks = static_cast<int>(scenario_->num_tasks());
    input.setting = scenario_->setting();
    input.level = scenario_->level();
    input.total_classes = scenario_->total_classes();
    input.visible = spec.visible;
    input.queries = scenario_->queries();
    awaiting_answers_ = true;
    return input;
  }

  Ack submit_answers(const AnswerSheet& answers) {
    if (!awaiting_answers_) throw ProtocolError("submit_answers called before next_task");
    validate(answers);
    score_row(cursor_ + 1, answers);
    awaiting_answers_ = false;
    ++cursor_;
    return Ack{static_cast<int>(cursor_)};
  }

  // Full evaluation results; only callable after the last submission, and
  // idempotent. INT/FWT stay unset here (they need the Joint reference and
  // the random baseline, attached by the orchestrator).
  Report finalize() const {
    if (!finished() || awaiting_answers_)
      throw ProtocolError("finalize called before the run completed");
    Report r;
    r.setting = scenario_->setting();
    r.level = scenario_->level();
    r.n_tasks = scenario_->num_tasks();
    r.primary_metric = scenario_->metrics().primary;
    r.matrices = matrices_;
    r.seeds = {scenario_->seed()};
    return r;
  }

 private:
  void validate(const AnswerSheet& answers) const {
    const auto& queries = scenario_->queries();
    if (answers.size() != queries.size())
      throw ProtocolError("answer sheet must cover every issued query exactly once (" +
                          std::to_string(answers.size()) + " of " +
                          std::to_string(queries.size()) + ")");
    const bool want_score = scenario_->level() == Level::link_prediction;
    for (const auto& [id, ans] : answers.entries()) {
      if (id < 0 || id >= static_cast<i64>(queries.size()))
        throw ProtocolError("answer for unknown query id " + std::to_string(id));
      if (want_score && ans.kind != Answer::Kind::score)
        throw ProtocolError("link prediction answers must be scores");
      if (!want_score && ans.kind != Answer::Kind::class_index)
        throw ProtocolError("classification answers must be class indices");
    }
  }

  void score_row(i64 row, const AnswerSheet& answers) {
    const auto& sealed = scenario_->sealed_.entries;
    const auto& sheet = answers.entries();
    if (scenario_->level() == Level::link_prediction) {
      std::vector<double> neg;
      for (size_t q = 0; q < sealed.size(); ++q)
        if (sealed[q].owner < 0) neg.push_back(sheet.at(static_cast<i64>(q)).score);
      for (i64 j = 1; j <= scenario_->num_tasks(); ++j) {
        std::vector<double> pos;
        std::vector<double> all;
        std::vector<int> labels;
        for (size_t q = 0; q < sealed.size(); ++q) {
          if (sealed[q].owner == j - 1) {
            pos.push_back(sheet.at(static_cast<i64>(q)).score);
            all.push_back(pos.back());
            labels.push_back(1);
          }
        }
        for (double s : neg) {
          all.push_back(s);
          labels.push_back(0);
        }
        matrices_.at(scenario_->metrics().primary)
            .set(row, j, hits_at_k(pos, neg, scenario_->metrics().hits_k));
        matrices_.at("auroc").set(row, j, auroc(all, labels));
      }
      return;
    }
    for (i64 j = 1; j <= scenario_->num_tasks(); ++j) {
      std::vector<int> pred, truth;
      for (size_t q = 0; q < sealed.size(); ++q)
        if (sealed[q].owner == j - 1) {
          pred.push_back(sheet.at(static_cast<i64>(q)).cls);
          truth.push_back(sealed[q].truth);
        }
      matrices_.at("accuracy").set(row, j, accuracy(pred, truth));
    }
  }

  std::shared_ptr<const Scenario> scenario_;
  std::map<std::string, PerformanceMatrix> matrices_;
  i64 cursor_ = 0;
  bool awaiting_answers_ = false;
};

}  // namespace grapal
