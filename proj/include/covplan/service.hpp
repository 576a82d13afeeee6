/*
* Copyright (C) 2026 covplan contributors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#pragma once

#include "covplan/data_io.hpp"
#include "covplan/json_io.hpp"
#include "covplan/pipeline.hpp"

#include <httplib.h>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

namespace covplan
{

enum class JobKind { scenario, calibration };
enum class JobState { queued, running, done, failed };

inline constexpr std::string_view to_string(JobKind k)
{
    return k == JobKind::scenario ? "scenario" : "calibration";
}

inline constexpr std::string_view to_string(JobState s)
{
    switch (s) {
    case JobState::queued: return "queued";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
    }
    return "failed";
}

/// result_ref is set iff state is done; error is set iff state is failed.
struct Job {
    std::string id;
    JobKind kind   = JobKind::scenario;
    JobState state = JobState::queued;
    std::string submitted_at;
    std::optional<std::string> finished_at;
    std::optional<std::string> result_ref;
    std::optional<std::string> error;
};

inline json to_json(const Job& job)
{
    json j = {{"id", job.id},
              {"kind", std::string(to_string(job.kind))},
              {"state", std::string(to_string(job.state))},
              {"submitted_at", job.submitted_at}};
    j["finished_at"] = job.finished_at ? json(*job.finished_at) : json(nullptr);
    j["result_ref"]  = job.result_ref ? json(*job.result_ref) : json(nullptr);
    j["error"]       = job.error ? json(*job.error) : json(nullptr);
    return j;
}

inline Job job_from_json(const json& j)
{
    Job job;
    job.id           = j.at("id").get<std::string>();
    job.kind         = j.at("kind").get<std::string>() == "calibration" ? JobKind::calibration : JobKind::scenario;
    const auto state = j.at("state").get<std::string>();
    job.state        = state == "queued"    ? JobState::queued
                       : state == "running" ? JobState::running
                       : state == "done"    ? JobState::done
                                            : JobState::failed;
    job.submitted_at = j.at("submitted_at").get<std::string>();
    auto opt = [&](const char* key) -> std::optional<std::string> {
        if (j.contains(key) && j[key].is_string()) {
            return j[key].get<std::string>();
        }
        return std::nullopt;
    };
    job.finished_at = opt("finished_at");
    job.result_ref  = opt("result_ref");
    job.error       = opt("error");
    return job;
}

inline json error_json(const Error& e)
{
    json j = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
    if (!e.field_path().empty()) {
        j["field_path"] = e.field_path();
    }
    return j;
}

namespace detail
{
inline std::string utc_timestamp()
{
    using namespace std::chrono;
    const auto now  = floor<milliseconds>(system_clock::now());
    const auto days = floor<std::chrono::days>(now);
    const year_month_day ymd{days};
    const hh_mm_ss hms{now - days};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()), int(hms.hours().count()), int(hms.minutes().count()),
                  int(hms.seconds().count()), int(hms.subseconds().count()));
    return buf;
}

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 14695981039346656037ull)
{
    for (unsigned char c : bytes) {
        h = (h ^ c) * 1099511628211ull;
    }
    return h;
}

inline std::string hex(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Write then rename so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, std::string_view bytes)
{
    auto tmp = path;
    tmp += ".tmp";
    write_file(tmp.string(), bytes);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw Error(ErrorCode::io, "cannot rename '" + tmp.string() + "': " + ec.message());
    }
}

/// Names usable as a single path component.
inline bool valid_artifact_name(std::string_view name)
{
    if (name.empty() || name.size() > 128 || name.front() == '.') {
        return false;
    }
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        if (!ok) {
            return false;
        }
    }
    return true;
}
} // namespace detail

struct EnsembleInfo {
    std::string name;
    std::size_t members = 0;
};

/// Job queue over a results directory laid out as
///   jobs/<id>.json, results/<content hash>/..., ensembles/<name>.json.
/// Submission validates synchronously; execution happens on a bounded worker pool.
class JobService
{
public:
    explicit JobService(std::filesystem::path root, unsigned workers = 0)
        : m_root(std::move(root))
    {
        namespace fs = std::filesystem;
        std::error_code ec;
        for (const char* sub : {"jobs", "results", "ensembles"}) {
            fs::create_directories(m_root / sub, ec);
            if (ec) {
                throw Error(ErrorCode::io, "cannot create '" + (m_root / sub).string() + "': " + ec.message());
            }
        }
        recover();
        const unsigned n = workers == 0 ? default_thread_count() : workers;
        for (unsigned k = 0; k < n; ++k) {
            m_workers.emplace_back([this](std::stop_token stop) { work(stop); });
        }
    }

    JobService(const JobService&)            = delete;
    JobService& operator=(const JobService&) = delete;

    ~JobService()
    {
        {
            std::lock_guard lock(m_queue_mutex);
            m_stopping = true;
        }
        m_queue_cv.notify_all();
        m_workers.clear();
    }

    const std::filesystem::path& root() const noexcept
    {
        return m_root;
    }

    /// body: {"scenario": <scenario document>, "ensemble": "<name>"}.
    Job submit_scenario(const json& body)
    {
        auto [scenario, members] = pipeline::guarded([&] {
            schema::object(body, "", {"scenario", "ensemble"});
            auto scenario    = scenario_from_json(schema::field(body, "scenario", ""), "scenario");
            const auto name  = schema::string(body, "ensemble", "");
            return std::pair{std::move(scenario), load_ensemble(name)};
        });
        return enqueue(JobKind::scenario, [this, scenario = std::move(scenario), members = std::move(members)] {
            const auto run = pipeline::run_scenario(scenario, members, 1);
            return store({{"bands.csv", run.bands_csv},
                          {"extrema.csv", run.extrema_csv},
                          {"extrema.json", to_json(run.extrema).dump(2) + "\n"}});
        });
    }

    /// body: {"manifest": {...}, "observed_csv": "...", "mobility_csv": "...", "name": "..."}.
    /// A named calibration registers its artifact as an ensemble when it finishes.
    Job submit_calibration(const json& body)
    {
        struct Inputs {
            CalibrationManifest manifest;
            ObservedSeries observed;
            std::optional<MobilitySeries> mobility;
            std::optional<std::string> name;
        };
        auto in = pipeline::guarded([&] {
            schema::object(body, "", {"manifest", "observed_csv", "mobility_csv", "name"});
            Inputs in;
            in.manifest = manifest_from_json(schema::field(body, "manifest", ""), "manifest");
            const auto tagged = [](const char* field, auto parse) {
                try {
                    return parse();
                }
                catch (const Error& e) {
                    if (e.code() == ErrorCode::schema_invalid) {
                        throw;
                    }
                    throw Error(e.code(), std::string(field) + ": " + e.what(), field);
                }
            };
            in.observed = tagged("observed_csv", [&] { return parse_observed_csv(schema::string(body, "observed_csv", "")); });
            if (body.contains("mobility_csv")) {
                in.mobility =
                    tagged("mobility_csv", [&] { return parse_mobility_csv(schema::string(body, "mobility_csv", "")); });
            }
            if (body.contains("name")) {
                in.name = schema::string(body, "name", "");
                if (!detail::valid_artifact_name(*in.name)) {
                    throw Error(ErrorCode::schema_invalid, "name: not a valid artifact name", "name");
                }
            }
            pipeline::make_problem(in.manifest, in.observed, in.mobility);
            return in;
        });
        return enqueue(JobKind::calibration, [this, in = std::move(in)] {
            const auto run = pipeline::run_calibration(in.manifest, in.observed, in.mobility);
            auto ref       = store({{"calibration.json", run.artifact_json}, {"bands.csv", run.bands_csv}});
            if (in.name) {
                detail::write_atomic(m_root / "ensembles" / (*in.name + ".json"), run.artifact_json);
            }
            return ref;
        });
    }

    /// Snapshot of a job; never waits on a running job.
    Job poll(const std::string& id) const
    {
        std::shared_lock lock(m_jobs_mutex);
        const auto it = m_jobs.find(id);
        if (it == m_jobs.end()) {
            throw Error(ErrorCode::not_found, "no job '" + id + "'");
        }
        return it->second;
    }

    std::vector<Job> jobs() const
    {
        std::shared_lock lock(m_jobs_mutex);
        std::vector<Job> out;
        for (const auto& [id, job] : m_jobs) {
            out.push_back(job);
        }
        return out;
    }

    /// Contents of one file of a finished job's result.
    std::string result_file(const std::string& id, const std::string& file) const
    {
        const auto job = poll(id);
        if (job.state != JobState::done) {
            throw Error(ErrorCode::job_not_done, "job '" + id + "' is " + std::string(to_string(job.state)));
        }
        const auto path = m_root / *job.result_ref / file;
        if (!std::filesystem::exists(path)) {
            throw Error(ErrorCode::not_found, "job '" + id + "' has no " + file);
        }
        return read_file(path.string());
    }

    std::vector<EnsembleInfo> ensembles() const
    {
        std::vector<EnsembleInfo> out;
        for (const auto& entry : std::filesystem::directory_iterator(m_root / "ensembles")) {
            if (entry.path().extension() != ".json") {
                continue;
            }
            const auto name = entry.path().stem().string();
            try {
                out.push_back({name, load_ensemble(name).size()});
            }
            catch (const Error&) {
                // unreadable artifacts are not listed
            }
        }
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
        return out;
    }

    std::vector<RateSet> load_ensemble(const std::string& name) const
    {
        const auto path = m_root / "ensembles" / (name + ".json");
        if (!detail::valid_artifact_name(name) || !std::filesystem::exists(path)) {
            throw Error(ErrorCode::unknown_artifact, "no ensemble named '" + name + "'", "ensemble");
        }
        return pipeline::guarded([&] { return ensemble_from_json(parse_json(read_file(path.string()))); });
    }

    /// Blocks until the job leaves queued/running or the timeout expires.
    Job wait(const std::string& id, std::chrono::milliseconds timeout = std::chrono::minutes(10)) const
    {
        std::shared_lock lock(m_jobs_mutex);
        m_jobs_cv.wait_for(lock, timeout, [&] {
            const auto it = m_jobs.find(id);
            return it == m_jobs.end() || it->second.state == JobState::done || it->second.state == JobState::failed;
        });
        lock.unlock();
        return poll(id);
    }

private:
    using Task = std::function<std::string()>;

    std::string new_id()
    {
        std::lock_guard lock(m_rng_mutex);
        return detail::hex(m_rng()) + detail::hex(m_rng());
    }

    Job enqueue(JobKind kind, Task task)
    {
        Job job;
        job.id           = new_id();
        job.kind         = kind;
        job.submitted_at = detail::utc_timestamp();
        publish(job);
        {
            std::lock_guard lock(m_queue_mutex);
            m_queue.emplace_back(job.id, std::move(task));
        }
        m_queue_cv.notify_one();
        return job;
    }

    void publish(const Job& job)
    {
        detail::write_atomic(m_root / "jobs" / (job.id + ".json"), to_json(job).dump(2) + "\n");
        {
            std::unique_lock lock(m_jobs_mutex);
            m_jobs[job.id] = job;
        }
        m_jobs_cv.notify_all();
    }

    /// Writes files under results/<hash of all contents>; returns the relative directory.
    std::string store(const std::vector<std::pair<std::string, std::string>>& files)
    {
        std::uint64_t h = detail::fnv1a64("");
        for (const auto& [name, bytes] : files) {
            h = detail::fnv1a64(name, h);
            h = detail::fnv1a64(std::string_view("\0", 1), h);
            h = detail::fnv1a64(bytes, h);
            h = detail::fnv1a64(std::string_view("\0", 1), h);
        }
        const auto ref = "results/" + detail::hex(h);
        const auto dir = m_root / ref;
        std::filesystem::create_directories(dir);
        for (const auto& [name, bytes] : files) {
            detail::write_atomic(dir / name, bytes);
        }
        return ref;
    }

    void work(std::stop_token)
    {
        for (;;) {
            std::pair<std::string, Task> item;
            {
                std::unique_lock lock(m_queue_mutex);
                m_queue_cv.wait(lock, [&] { return m_stopping || !m_queue.empty(); });
                if (m_stopping) {
                    return;
                }
                item = std::move(m_queue.front());
                m_queue.pop_front();
            }
            auto job  = poll(item.first);
            job.state = JobState::running;
            publish(job);
            try {
                job.result_ref = item.second();
                job.state      = JobState::done;
            }
            catch (const Error& e) {
                job.state = JobState::failed;
                job.error = std::string(to_string(e.code())) + ": " + e.what();
            }
            catch (const std::exception& e) {
                job.state = JobState::failed;
                job.error = std::string("internal: ") + e.what();
            }
            job.finished_at = detail::utc_timestamp();
            try {
                publish(job);
            }
            catch (const Error&) {
                std::unique_lock lock(m_jobs_mutex);
                m_jobs[job.id] = job;
            }
        }
    }

    /// Reloads persisted jobs; work that was pending at shutdown is marked failed.
    void recover()
    {
        for (const auto& entry : std::filesystem::directory_iterator(m_root / "jobs")) {
            if (entry.path().extension() != ".json") {
                continue;
            }
            Job job;
            try {
                job = job_from_json(json::parse(read_file(entry.path().string())));
            }
            catch (const std::exception&) {
                continue;
            }
            if (job.state == JobState::queued || job.state == JobState::running) {
                job.state       = JobState::failed;
                job.error       = "restarted";
                job.finished_at = detail::utc_timestamp();
                job.result_ref.reset();
                detail::write_atomic(entry.path(), to_json(job).dump(2) + "\n");
            }
            m_jobs[job.id] = job;
        }
    }

    std::filesystem::path m_root;

    mutable std::shared_mutex m_jobs_mutex;
    mutable std::condition_variable_any m_jobs_cv;
    std::map<std::string, Job> m_jobs;

    std::mutex m_queue_mutex;
    std::condition_variable m_queue_cv;
    std::deque<std::pair<std::string, Task>> m_queue;
    bool m_stopping = false;

    std::mutex m_rng_mutex;
    std::mt19937_64 m_rng{std::random_device{}()};

    std::vector<std::jthread> m_workers;
};

inline int http_status(const Error& e)
{
    switch (e.code()) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::unknown_artifact: return 404;
    case ErrorCode::job_not_done: return 409;
    case ErrorCode::io:
    case ErrorCode::internal: return 500;
    default: return e.is_validation() ? 400 : 500;
    }
}

/// Routes the HTTP API onto a JobService.
inline void install_routes(httplib::Server& server, JobService& service)
{
    auto fail = [](httplib::Response& res, const Error& e) {
        res.status = http_status(e);
        res.set_content(error_json(e).dump() + "\n", "application/json");
    };
    auto guard = [fail](auto handler) {
        return [fail, handler](const httplib::Request& req, httplib::Response& res) {
            try {
                handler(req, res);
            }
            catch (const Error& e) {
                fail(res, e);
            }
            catch (const std::exception& e) {
                fail(res, Error(ErrorCode::internal, e.what()));
            }
        };
    };
    auto send_json = [](httplib::Response& res, const json& j, int status = 200) {
        res.status = status;
        res.set_content(j.dump() + "\n", "application/json");
    };

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"status\":\"ok\"}\n", "application/json");
    });
    server.Post("/api/v1/scenarios/run", guard([&service, send_json](const auto& req, auto& res) {
                    send_json(res, to_json(service.submit_scenario(parse_json(req.body))), 202);
                }));
    server.Post("/api/v1/calibrations", guard([&service, send_json](const auto& req, auto& res) {
                    send_json(res, to_json(service.submit_calibration(parse_json(req.body))), 202);
                }));
    server.Get(R"(/api/v1/jobs/([0-9a-f]+))", guard([&service, send_json](const auto& req, auto& res) {
                   send_json(res, to_json(service.poll(req.matches[1])));
               }));
    server.Get(R"(/api/v1/jobs/([0-9a-f]+)/bands)", guard([&service](const auto& req, auto& res) {
                   res.set_content(service.result_file(req.matches[1], "bands.csv"), "text/csv");
               }));
    server.Get("/api/v1/ensembles", guard([&service, send_json](const auto&, auto& res) {
                   json list = json::array();
                   for (const auto& e : service.ensembles()) {
                       list.push_back({{"name", e.name}, {"members", e.members}});
                   }
                   send_json(res, list);
               }));
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) {
            const auto code = res.status == 404 ? ErrorCode::not_found : ErrorCode::internal;
            res.set_content(error_json(Error(code, "HTTP " + std::to_string(res.status))).dump() + "\n",
                            "application/json");
        }
    });
}

} // namespace covplan
