#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "studio/error.hpp"
#include "studio/service/studio.hpp"

namespace studio::service {

namespace fs = std::filesystem;

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::queued: return "queued";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
  }
  return "failed";
}

JobState job_state_from_string(std::string_view s) {
  if (s == "queued") return JobState::queued;
  if (s == "running") return JobState::running;
  if (s == "done") return JobState::done;
  if (s == "failed") return JobState::failed;
  throw Error(Errc::invalid_argument, "unknown job state '" + std::string(s) + "'");
}

nlohmann::json to_json(const Job& j) {
  return {{"job_id", j.job_id},
          {"session_id", j.session_id},
          {"state", to_string(j.state)},
          {"progress", j.progress},
          {"error", j.error ? nlohmann::json(*j.error) : nlohmann::json(nullptr)}};
}

JobQueue::JobQueue(int workers, fs::path log_file) : log_file_(std::move(log_file)) {
  if (workers < 1) throw Error(Errc::config_error, "worker count must be at least 1");
  if (log_file_.has_parent_path()) fs::create_directories(log_file_.parent_path());
  for (int i = 0; i < workers; ++i) workers_.emplace_back([this] { worker(); });
}

JobQueue::~JobQueue() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
    paused_ = false;
  }
  cv_.notify_all();
  for (auto& t : workers_) t.join();
}

void JobQueue::record(const Job& job) {
  std::lock_guard lock(log_mutex_);
  std::ofstream out(log_file_, std::ios::app);
  out << to_json(job).dump() << '\n';
}

Job JobQueue::submit(const std::string& session_id, Task task, Finished on_finish) {
  static thread_local std::mt19937_64 entropy(std::random_device{}());
  Job job;
  {
    std::lock_guard lock(mutex_);
    std::ostringstream id;
    id << "job-" << std::setw(6) << std::setfill('0') << ++counter_ << '-' << std::hex << (entropy() & 0xffffffffu);
    job.job_id = id.str();
    job.session_id = session_id;
    jobs_[job.job_id] = job;
    pending_.emplace_back(job.job_id, std::move(task), std::move(on_finish));
  }
  record(job);
  cv_.notify_one();
  return job;
}

std::optional<Job> JobQueue::status(const std::string& job_id) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

void JobQueue::update(const std::string& id, const std::function<void(Job&)>& fn) {
  Job snapshot;
  {
    std::lock_guard lock(mutex_);
    fn(jobs_.at(id));
    snapshot = jobs_.at(id);
  }
  record(snapshot);
}

void JobQueue::worker() {
  for (;;) {
    std::tuple<std::string, Task, Finished> item;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return stopping_ || (!paused_ && !pending_.empty()); });
      if (stopping_ && (pending_.empty() || paused_)) return;
      item = std::move(pending_.front());
      pending_.pop_front();
      ++running_;
    }
    auto& [id, task, finished] = item;
    update(id, [](Job& j) { j.state = JobState::running; });
    Job outcome = *status(id);
    try {
      task(id, [&](double p) {
        update(id, [p](Job& j) { j.progress = std::clamp(std::max(j.progress, p), 0.0, 1.0); });
      });
      outcome.state = JobState::done;
      outcome.progress = 1.0;
    } catch (const std::exception& e) {
      outcome.state = JobState::failed;
      outcome.progress = status(id)->progress;
      outcome.error = e.what();
    }
    // Owners observe the outcome before pollers do.
    if (finished) {
      try {
        finished(outcome);
      } catch (const std::exception& e) {
        outcome.state = JobState::failed;
        outcome.error = e.what();
      }
    }
    update(id, [&](Job& j) { j = outcome; });
    {
      std::lock_guard lock(mutex_);
      --running_;
    }
    idle_cv_.notify_all();
  }
}

void JobQueue::wait_idle() {
  std::unique_lock lock(mutex_);
  idle_cv_.wait(lock, [&] { return running_ == 0 && (pending_.empty() || paused_); });
}

void JobQueue::pause() {
  std::lock_guard lock(mutex_);
  paused_ = true;
}

void JobQueue::resume() {
  {
    std::lock_guard lock(mutex_);
    paused_ = false;
  }
  cv_.notify_all();
}

}  // namespace studio::service
