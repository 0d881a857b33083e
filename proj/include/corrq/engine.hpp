#pragma once

// Event-exact state machine for the n-server queue with (optionally
// correlated) abandonment.
//
// The engine owns internal events only: service completions and abandonment
// deadlines. Arrivals are pushed in from outside with arrive(), which lets
// one driver loop feed the same customer stream to several engines.
//
// Equal-time ordering: departure < abandonment < arrival. A queued customer
// offered a server at exactly its deadline abandons instead.
//
// A delayed customer occupies its server for exactly its own S. In perfect
// mode the first theta*w of that is phase 1; phase-1 ends are tracked in a
// separate heap that only moves the Z1/Z2 counters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <queue>
#include <string>
#include <vector>

#include "corrq/error.hpp"
#include "corrq/model.hpp"
#include "corrq/rng.hpp"

namespace corrq {

/// Initial condition.
///   empty:   X(0) = 0.
///   fresh:   min(X0, n) in service with Exp(1) remaining and no phase 1,
///            max(X0 - n, 0) queued with zero elapsed wait.
///   general: explicit remaining phase-1 durations of in-service customers
///            (0 means phase 2) and elapsed waits of queued customers, head
///            of line first.
struct InitSpec {
    enum class Variant { empty, fresh, general };

    Variant variant = Variant::empty;
    long initial_total = 0;
    std::vector<double> phase1_remaining;
    std::vector<double> queued_waits;

    static InitSpec empty() { return {}; }
    static InitSpec fresh(long x0) {
        InitSpec s;
        s.variant = Variant::fresh;
        s.initial_total = x0;
        return s;
    }
    static InitSpec general(std::vector<double> phase1, std::vector<double> waits) {
        InitSpec s;
        s.variant = Variant::general;
        s.initial_total = static_cast<long>(phase1.size() + waits.size());
        s.phase1_remaining = std::move(phase1);
        s.queued_waits = std::move(waits);
        return s;
    }
};

/// Counts of state-identity violations seen at event epochs.
struct InvariantReport {
    std::uint64_t epochs_checked = 0;
    std::uint64_t state_identity = 0;   // Q = (X-n)+, Z = X^n, Z = Z1 + Z2
    std::uint64_t idle_with_queue = 0;  // Z < n but Q > 0
    std::uint64_t deadline = 0;         // served at/after deadline, or abandoned off-deadline
    std::uint64_t service_duration = 0; // held a server for other than S
    std::uint64_t phase = 0;            // departed while still in phase 1
    std::uint64_t recount = 0;          // deep check: counters disagree with a recount

    [[nodiscard]] std::uint64_t total() const noexcept {
        return state_identity + idle_with_queue + deadline + service_duration + phase + recount;
    }
    InvariantReport& operator+=(const InvariantReport& o) noexcept {
        epochs_checked += o.epochs_checked;
        state_identity += o.state_identity;
        idle_with_queue += o.idle_with_queue;
        deadline += o.deadline;
        service_duration += o.service_duration;
        phase += o.phase;
        recount += o.recount;
        return *this;
    }
};

struct EventCounts {
    std::uint64_t initial = 0;
    std::uint64_t arrivals = 0;
    std::uint64_t departures = 0;
    std::uint64_t abandonments = 0;
};

enum class ExitKind { departed, abandoned };

/// The simulator's evolving state plus its event lists.
class ServiceSystem {
public:
    using ExitObserver = std::function<void(const Customer&, double exit_time, ExitKind)>;

    /// `deep_checks` recounts Z, Z1 and Q from the raw containers at every
    /// epoch (O(n) per event; for tests at small n).
    explicit ServiceSystem(const ModelParams& params, bool deep_checks = false)
        : params_(params), deep_checks_(deep_checks) {}

    void set_exit_observer(ExitObserver obs) { observer_ = std::move(obs); }

    /// Loads an initial condition at clock 0. `rng` supplies the S (and T)
    /// draws of initial customers.
    void initialize(const InitSpec& init, Stream& rng) {
        require(clock_ == 0.0 && counts_.arrivals == 0 && slots_.empty(),
                "initialize must be called on a fresh system");
        const long n = params_.n;
        switch (init.variant) {
            case InitSpec::Variant::empty:
                require(init.initial_total == 0, "empty init must have X(0) = 0");
                break;
            case InitSpec::Variant::fresh: {
                require(init.initial_total >= 0, "X(0) must be >= 0");
                const long served = std::min(init.initial_total, n);
                for (long i = 0; i < served; ++i) {
                    Customer c;
                    c.id = next_id_++;
                    c.service_req = rng.exponential(1.0);
                    add_initial_in_service(c, 0.0);
                }
                for (long i = served; i < init.initial_total; ++i)
                    add_initial_queued(sample_customer(rng, params_, 0.0, next_id_++));
                break;
            }
            case InitSpec::Variant::general: {
                const auto& r = init.phase1_remaining;
                const auto& l = init.queued_waits;
                require(init.initial_total == static_cast<long>(r.size() + l.size()),
                        "general init: X(0) must equal #in-service + #queued");
                require(static_cast<long>(r.size()) <= n, "general init: more than n customers in service");
                require(l.empty() || static_cast<long>(r.size()) == n,
                        "general init: queued customers require all n servers busy");
                for (double x : r) require(x >= 0.0 && std::isfinite(x), "general init: phase-1 remaining must be >= 0");
                for (double x : l) require(x >= 0.0 && std::isfinite(x), "general init: queued waits must be >= 0");
                for (std::size_t i = 1; i < l.size(); ++i)
                    require(l[i] <= l[i - 1], "general init: queued waits must be non-increasing (FIFO)");
                for (double rem : r) {
                    Customer c;
                    c.id = next_id_++;
                    c.service_req = rem + rng.exponential(1.0);
                    c.patience = kInf;
                    c.abandon_deadline = kInf;
                    add_initial_in_service(c, rem);
                }
                for (double wait : l) add_initial_queued(sample_queued_with_wait(rng, wait));
                break;
            }
        }
        counts_.initial = slots_.size();
        check_epoch();
    }

    [[nodiscard]] double clock() const noexcept { return clock_; }
    [[nodiscard]] const ModelParams& params() const noexcept { return params_; }
    [[nodiscard]] long X() const noexcept { return z_ + q_; }
    [[nodiscard]] long Q() const noexcept { return q_; }
    [[nodiscard]] long Z() const noexcept { return z_; }
    [[nodiscard]] long Z1() const noexcept { return z1_; }
    [[nodiscard]] long Z2() const noexcept { return z2_; }
    [[nodiscard]] const EventCounts& counts() const noexcept { return counts_; }
    [[nodiscard]] const InvariantReport& invariants() const noexcept { return inv_; }

    /// Hands out customer ids continuing after those used for initial customers.
    std::uint64_t next_customer_id() noexcept { return next_id_++; }

    /// Time of the next internal event (departure or live abandonment), +inf if none.
    [[nodiscard]] double next_event_time() const noexcept {
        double t = kInf;
        if (!departures_.empty()) t = departures_.front().time;
        if (!abandons_.empty()) t = std::min(t, abandons_.front().time);
        return t;
    }

    /// Processes the single earliest internal event.
    void step() {
        const bool dep = !departures_.empty() &&
                         (abandons_.empty() || departures_.front().time <= abandons_.front().time);
        if (dep) {
            const Entry e = pop_heap_entry(departures_);
            set_clock(e.time);
            on_departure(e.seq);
        } else {
            const Entry e = pop_heap_entry(abandons_);
            set_clock(e.time);
            on_abandon(e.seq);
        }
        prune_abandons();
        check_epoch();
    }

    /// Processes every internal event with time <= t, then moves the clock to t.
    void advance_to(double t) {
        require(t >= clock_, "cannot move the clock backwards");
        while (next_event_time() <= t) step();
        set_clock(t);
    }

    /// Admits an arrival at the current clock. Call advance_to(arrival_time) first.
    void arrive(Customer c) {
        require(c.arrival_time >= clock_, "arrival in the past");
        set_clock(c.arrival_time);
        ++counts_.arrivals;
        const std::uint64_t seq = push_slot(std::move(c));
        if (z_ < params_.n) {
            start_service(seq);
        } else {
            enqueue(seq);
        }
        check_epoch();
    }

    /// Sum of remaining phase-1 times of in-service customers plus elapsed
    /// waits of queued customers.
    [[nodiscard]] double workload() const {
        double sum = 0.0;
        for (const Entry& e : phase1_)
            if (e.time > clock_) sum += e.time - clock_;
        for (std::uint64_t seq : queue_) {
            if (seq < base_seq_) continue;
            const Slot& s = slot(seq);
            if (s.status == Status::waiting) sum += clock_ - s.c.arrival_time;
        }
        return sum;
    }

    /// Elapsed wait of the head-of-line customer (0 if the queue is empty).
    [[nodiscard]] double head_of_line_wait() const {
        for (std::uint64_t seq : queue_) {
            if (seq < base_seq_) continue;
            const Slot& s = slot(seq);
            if (s.status == Status::waiting) return clock_ - s.c.arrival_time;
        }
        return 0.0;
    }

    /// Wait a hypothetical infinitely patient customer arriving now would
    /// experience, by replaying the known future with arrivals suspended.
    [[nodiscard]] double offered_wait() const {
        if (z_ < params_.n) return 0.0;
        std::vector<double> free_at;
        free_at.reserve(departures_.size());
        for (const Entry& e : departures_) free_at.push_back(e.time);
        std::greater<> cmp;
        std::make_heap(free_at.begin(), free_at.end(), cmp);
        for (std::uint64_t seq : queue_) {
            if (seq < base_seq_) continue;
            const Slot& s = slot(seq);
            if (s.status != Status::waiting) continue;
            const double f = free_at.front();
            if (f < s.c.abandon_deadline) {
                std::pop_heap(free_at.begin(), free_at.end(), cmp);
                free_at.back() = f + s.c.service_req;
                std::push_heap(free_at.begin(), free_at.end(), cmp);
            }
        }
        return free_at.front() - clock_;
    }

    /// Service-completion times of customers currently in service.
    [[nodiscard]] std::vector<double> in_service_ends() const {
        std::vector<double> out;
        out.reserve(departures_.size());
        for (const Entry& e : departures_) out.push_back(e.time);
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Queued customers in FIFO order.
    [[nodiscard]] std::vector<Customer> queued_customers() const {
        std::vector<Customer> out;
        for (std::uint64_t seq : queue_) {
            if (seq < base_seq_) continue;
            const Slot& s = slot(seq);
            if (s.status == Status::waiting) out.push_back(s.c);
        }
        return out;
    }

    /// Arrivals = departures + abandonments + in-system (initial customers
    /// count as arrivals at 0).
    [[nodiscard]] bool conserved() const noexcept {
        return counts_.initial + counts_.arrivals ==
               counts_.departures + counts_.abandonments + static_cast<std::uint64_t>(X());
    }

private:
    enum class Status { waiting, in_service, departed, abandoned };

    struct Slot {
        Customer c;
        Status status = Status::waiting;
        double phase1_end = 0.0;
    };

    struct Entry {
        double time;
        std::uint64_t seq;
    };
    struct EntryLater {
        bool operator()(const Entry& a, const Entry& b) const noexcept {
            return a.time > b.time || (a.time == b.time && a.seq > b.seq);
        }
    };

    static Entry pop_heap_entry(std::vector<Entry>& h) {
        std::pop_heap(h.begin(), h.end(), EntryLater{});
        Entry e = h.back();
        h.pop_back();
        return e;
    }
    static void push_heap_entry(std::vector<Entry>& h, Entry e) {
        h.push_back(e);
        std::push_heap(h.begin(), h.end(), EntryLater{});
    }

    Slot& slot(std::uint64_t seq) { return slots_[static_cast<std::size_t>(seq - base_seq_)]; }
    const Slot& slot(std::uint64_t seq) const { return slots_[static_cast<std::size_t>(seq - base_seq_)]; }

    std::uint64_t push_slot(Customer c) {
        slots_.push_back(Slot{std::move(c), Status::waiting, 0.0});
        return base_seq_ + slots_.size() - 1;
    }

    Customer sample_queued_with_wait(Stream& rng, double wait) {
        // Conditioned on still waiting after `wait`: memorylessness of S
        // (perfect) or T (independent).
        Customer c;
        c.id = next_id_++;
        c.arrival_time = -wait;
        switch (params_.mode) {
            case CorrelationMode::perfect:
                c.patience = (params_.theta * wait + rng.exponential(1.0)) / params_.theta;
                c.service_req = c.patience * params_.theta;
                break;
            case CorrelationMode::independent:
                c.service_req = rng.exponential(1.0);
                c.patience = wait + rng.exponential(params_.theta);
                break;
            case CorrelationMode::none:
                c.service_req = rng.exponential(1.0);
                c.patience = kInf;
                break;
        }
        c.abandon_deadline = c.arrival_time + c.patience;
        return c;
    }

    void add_initial_in_service(Customer c, double phase1_remaining) {
        c.service_start = 0.0;
        c.service_end = c.service_req;
        const std::uint64_t seq = push_slot(std::move(c));
        Slot& s = slot(seq);
        s.status = Status::in_service;
        s.phase1_end = std::min(phase1_remaining, *s.c.service_end);
        ++z_;
        if (s.phase1_end > 0.0) {
            ++z1_;
            push_heap_entry(phase1_, {s.phase1_end, seq});
        } else {
            ++z2_;
        }
        push_heap_entry(departures_, {*s.c.service_end, seq});
    }

    void add_initial_queued(Customer c) {
        const std::uint64_t seq = push_slot(std::move(c));
        enqueue(seq);
    }

    void enqueue(std::uint64_t seq) {
        Slot& s = slot(seq);
        s.status = Status::waiting;
        queue_.push_back(seq);
        ++q_;
        if (std::isfinite(s.c.abandon_deadline)) push_heap_entry(abandons_, {s.c.abandon_deadline, seq});
    }

    void set_clock(double t) {
        clock_ = t;
        while (!phase1_.empty() && phase1_.front().time <= clock_) {
            pop_heap_entry(phase1_);
            --z1_;
            ++z2_;
        }
    }

    void start_service(std::uint64_t seq) {
        Slot& s = slot(seq);
        if (!(clock_ < s.c.abandon_deadline)) ++inv_.deadline;
        s.status = Status::in_service;
        s.c.service_start = clock_;
        s.c.service_end = clock_ + s.c.service_req;
        ++z_;
        const double wait = clock_ - s.c.arrival_time;
        s.phase1_end = clock_;
        if (params_.mode == CorrelationMode::perfect && wait > 0.0)
            s.phase1_end = std::min(clock_ + params_.theta * wait, *s.c.service_end);
        if (s.phase1_end > clock_) {
            ++z1_;
            push_heap_entry(phase1_, {s.phase1_end, seq});
        } else {
            ++z2_;
        }
        push_heap_entry(departures_, {*s.c.service_end, seq});
    }

    void on_departure(std::uint64_t seq) {
        Slot& s = slot(seq);
        if (s.phase1_end > clock_) ++inv_.phase;
        const double held = clock_ - *s.c.service_start;
        if (std::abs(held - s.c.service_req) > 1e-9 * std::max(1.0, std::abs(clock_))) ++inv_.service_duration;
        s.status = Status::departed;
        --z_;
        --z2_;
        ++counts_.departures;
        if (observer_) observer_(s.c, clock_, ExitKind::departed);
        serve_from_queue();
        release_front();
    }

    void on_abandon(std::uint64_t seq) {
        if (seq < base_seq_) return;
        Slot& s = slot(seq);
        if (s.status != Status::waiting) return;
        if (clock_ != s.c.abandon_deadline) ++inv_.deadline;
        abandon(s);
        release_front();
    }

    void abandon(Slot& s) {
        s.status = Status::abandoned;
        --q_;
        ++counts_.abandonments;
        if (observer_) observer_(s.c, clock_, ExitKind::abandoned);
    }

    void serve_from_queue() {
        while (z_ < params_.n && !queue_.empty()) {
            const std::uint64_t seq = queue_.front();
            queue_.pop_front();
            if (seq < base_seq_) continue;
            Slot& s = slot(seq);
            if (s.status != Status::waiting) continue;
            if (clock_ < s.c.abandon_deadline) {
                --q_;
                start_service(seq);
            } else {
                abandon(s);
            }
        }
        while (!queue_.empty() &&
               (queue_.front() < base_seq_ || slot(queue_.front()).status != Status::waiting))
            queue_.pop_front();
    }

    // Drops finished customers from the front of the slot store.
    void release_front() {
        while (!slots_.empty() &&
               (slots_.front().status == Status::departed || slots_.front().status == Status::abandoned)) {
            slots_.pop_front();
            ++base_seq_;
        }
        while (!queue_.empty() &&
               (queue_.front() < base_seq_ || slot(queue_.front()).status != Status::waiting))
            queue_.pop_front();
    }

    // Discards abandonment entries of customers who already entered service.
    void prune_abandons() {
        while (!abandons_.empty()) {
            const std::uint64_t seq = abandons_.front().seq;
            if (seq >= base_seq_ && slot(seq).status == Status::waiting) break;
            pop_heap_entry(abandons_);
        }
    }

    void check_epoch() {
        ++inv_.epochs_checked;
        const long x = X();
        const long n = params_.n;
        if (q_ != std::max(x - n, 0L) || z_ != std::min(x, n) || z_ != z1_ + z2_ || z1_ < 0 || z2_ < 0)
            ++inv_.state_identity;
        if (z_ < n && q_ > 0) ++inv_.idle_with_queue;
        if (deep_checks_) deep_check();
    }

    void deep_check() {
        long z = 0, z1 = 0, q = 0;
        for (const Slot& s : slots_) {
            if (s.status == Status::in_service) {
                ++z;
                if (clock_ < s.phase1_end) ++z1;
            } else if (s.status == Status::waiting) {
                ++q;
            }
        }
        if (z != z_ || z1 != z1_ || q != q_ || static_cast<long>(departures_.size()) != z_) ++inv_.recount;
    }

    ModelParams params_;
    bool deep_checks_ = false;
    double clock_ = 0.0;
    long z_ = 0, z1_ = 0, z2_ = 0, q_ = 0;
    std::uint64_t next_id_ = 0;
    std::uint64_t base_seq_ = 0;
    std::deque<Slot> slots_;
    std::deque<std::uint64_t> queue_;
    std::vector<Entry> departures_;
    std::vector<Entry> abandons_;
    std::vector<Entry> phase1_;
    EventCounts counts_;
    InvariantReport inv_;
    ExitObserver observer_;
};

}  // namespace corrq
