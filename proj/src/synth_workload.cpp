#include "sosg/synth_workload.hpp"

#include "sosg/time_util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace sosg {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr Micros kSecond = 1'000'000;
constexpr Micros kDay = 86'400 * kSecond;
constexpr Micros kMilli = 1'000;
constexpr Micros kWindowStart = 1'464'739'200LL * kSecond;  // 2016-06-01T00:00:00Z

constexpr const char* kCompute = "nova.compute.manager";

std::string hex(std::uint64_t v, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*llx", width, static_cast<unsigned long long>(v));
    return buf;
}

std::string dump(const ojson& j) { return j.dump(); }

/// Evenly spread instant i of n across the window.
Micros spread(const Corpus& c, std::uint64_t i, std::uint64_t n) {
    Micros span = c.window_end - c.window_start;
    return c.window_start + static_cast<Micros>((2 * i + 1) * static_cast<unsigned __int128>(span) / (2 * n));
}

Micros round_start(const Corpus& c, std::uint32_t r, std::uint32_t rounds) {
    Micros span = c.window_end - c.window_start;
    return c.window_start + static_cast<Micros>(static_cast<unsigned __int128>(span) * r / rounds);
}

std::string syslog_line(Micros ts, const char* severity, const std::string& component, const std::string& msg) {
    return format_iso8601(ts) + " " + severity + " " + component + " " + msg + "\n";
}

const std::array<const char*, 6> kVmTemplates{{
    "[instance: %s] VM Resumed (Lifecycle Event)",
    "[instance: %s] During sync_power_state the instance has a pending task (None). Skip.",
    "[instance: %s] Updating instance_info_cache with network_info",
    "[instance: %s] Periodic task: power state in sync (running)",
    "[instance: %s] Checking state",
    "[instance: %s] Instance spawned successfully.",
}};

const std::array<const char*, 4> kMigrationTemplates{{
    "[instance: %s] Starting migrate_disk_and_power_off to %s",
    "[instance: %s] Live Migration failure: operation failed, retrying on %s",
    "[instance: %s] Migration running for 30 secs, memory 100%% remaining; destination %s",
    "[instance: %s] Pre live migration failed at %s",
}};

const std::array<const char*, 3> kHostTemplates{{
    "Auditing locally available compute resources for node %s",
    "Final resource view: name=%s phys_ram=257851MB used_ram=98304MB phys_disk=2047GB used_disk=480GB",
    "Compute_service record updated for %s",
}};

const std::array<const char*, 4> kCephTemplates{{
    "%s %s: 2.%s scrub starts",
    "%s %s: 2.%s scrub ok",
    "%s %s: heartbeat_check ok, 0 slow requests on pg 2.%s",
    "%s %s: log_channel(cluster) pgmap 2.%s active+clean",
}};

std::string fmt(const char* tmpl, const std::string& a, const std::string& b = {}, const std::string& c = {}) {
    char buf[512];
    std::snprintf(buf, sizeof buf, tmpl, a.c_str(), b.c_str(), c.c_str());
    return buf;
}

struct DbRow {
    Micros ts;
    std::uint64_t seq;
    std::string line;
};

class Renderer {
public:
    explicit Renderer(const Corpus& c) : c_(c) {
        for (std::uint32_t i = 0; i < c.vms.size(); ++i) {
            if (c.vms[i].live_at_start || c.vms[i].fault) by_host_[c.vms[i].host].push_back(i);
        }
        for (auto& [_, v] : by_host_) {
            std::sort(v.begin(), v.end(), [&](auto a, auto b) { return c.vms[a].slot < c.vms[b].slot; });
        }
    }

    std::uint64_t objects_per_vm() const { return std::uint64_t{c_.spec.images_per_vm} * c_.spec.blocks_per_image; }

    void libvirt_round(std::uint32_t h, std::uint32_t r, std::string& out) const {
        Micros base = round_start(c_, r, c_.schedule.libvirt_rounds);
        const std::string& host = c_.hosts[h];
        std::vector<std::uint32_t> present;
        if (auto it = by_host_.find(h); it != by_host_.end()) {
            for (auto i : it->second) {
                const VmModel& vm = c_.vms[i];
                Micros ts = base + (vm.slot + 1) * kMilli;
                if (vm.libvirt && (!vm.libvirt_until || ts < *vm.libvirt_until)) present.push_back(i);
            }
        }
        ojson head;
        head["ts"] = format_iso8601(base);
        head["host"] = host;
        head["event"] = "domstats-begin";
        head["hypervisor"] = "QEMU";
        out += dump(head) + "\n";
        for (auto i : present) {
            const VmModel& vm = c_.vms[i];
            std::uint64_t k = static_cast<std::uint64_t>(vm.rank) * 7919 + r;
            ojson j;
            j["ts"] = format_iso8601(base + (vm.slot + 1) * kMilli);
            j["host"] = host;
            j["uuid"] = vm.uuid;
            j["name"] = vm.name;
            j["state"] = "running";
            j["vcpus"] = 2;
            j["memory_kb"] = 4194304;
            j["cpu"] = {{"time_ns", 1'000'000'000ULL * (k + 11)}, {"user_ns", 600'000'000ULL * (k + 3)}};
            j["balloon"] = {{"current_kb", 4194304}, {"maximum_kb", 4194304}, {"rss_kb", 2'000'000 + k % 90'000}};
            j["block"] = {{"rd_bytes", 4096 * (k + 17)}, {"wr_bytes", 8192 * (k + 5)}};
            out += dump(j) + "\n";
        }
        ojson tail;
        tail["ts"] = format_iso8601(base + (by_host_max_slot(h) + 2) * kMilli);
        tail["host"] = host;
        tail["event"] = "domstats-end";
        tail["hypervisor"] = "QEMU";
        out += dump(tail) + "\n";
    }

    void ovs_round(std::uint32_t h, std::uint32_t r, std::string& out) const {
        Micros base = round_start(c_, r, c_.schedule.ovs_rounds);
        const std::string& host = c_.hosts[h];
        ojson head;
        head["ts"] = format_iso8601(base);
        head["host"] = host;
        head["bridge"] = "br-int";
        head["table"] = "Interface";
        head["marker"] = "dump-begin";
        out += dump(head) + "\n";
        if (auto it = by_host_.find(h); it != by_host_.end()) {
            for (auto i : it->second) {
                const VmModel& vm = c_.vms[i];
                if (!vm.ovs) continue;
                std::uint64_t k = static_cast<std::uint64_t>(vm.rank) * 104729 + r * 31;
                ojson j;
                j["ts"] = format_iso8601(base + (vm.slot + 1) * kMilli);
                j["host"] = host;
                j["_uuid"] = vm.ovs_row;
                j["iface"] = vm.iface;
                j["mac"] = vm.mac;
                j["port_id"] = vm.port_id;
                j["uuid"] = vm.uuid;
                j["bridge"] = "br-int";
                j["type"] = "";
                j["admin_state"] = "up";
                j["link_state"] = "up";
                j["link_speed"] = 10000000;
                j["mtu"] = 1450;
                j["ofport"] = 10 + vm.slot;
                j["duplex"] = "full";
                j["ifindex"] = 100 + vm.slot;
                j["iface_status"] = "active";
                j["statistics"] = {{"collisions", 0},           {"rx_bytes", 1500 * (k + 7)},
                                   {"rx_crc_err", 0},           {"rx_dropped", 0},
                                   {"rx_errors", 0},            {"rx_frame_err", 0},
                                   {"rx_over_err", 0},          {"rx_packets", 12 * (k + 7)},
                                   {"tx_bytes", 1400 * (k + 3)}, {"tx_dropped", 0},
                                   {"tx_errors", 0},            {"tx_packets", 11 * (k + 3)}};
                j["status"] = {{"driver_name", "tun"}, {"driver_version", "1.6"}, {"firmware_version", ""}};
                j["other_config"] = {{"tag", "1"}, {"net_name", "private"}, {"segmentation_id", "1042"}};
                j["options"] = {{"csum", "true"}, {"df_default", "true"}, {"in_key", "flow"}, {"out_key", "flow"}};
                j["cfm_fault"] = "false";
                j["lacp_current"] = "false";
                j["ingress_policing_rate"] = 0;
                j["ingress_policing_burst"] = 0;
                out += dump(j) + "\n";
            }
        }
        ojson tail;
        tail["ts"] = format_iso8601(base + (by_host_max_slot(h) + 2) * kMilli);
        tail["host"] = host;
        tail["bridge"] = "br-int";
        tail["table"] = "Interface";
        tail["marker"] = "dump-end";
        out += dump(tail) + "\n";
    }

    void cephimage_round(std::uint32_t r, std::string& out) const {
        Micros base = round_start(c_, r, c_.schedule.cephimage_rounds);
        for (const VmModel& vm : c_.vms) {
            if (!vm.ceph) continue;
            std::uint64_t o = 0;
            for (const auto& img : vm.images) {
                for (std::size_t b = 0; b < img.objects.size(); ++b, ++o) {
                    ojson j;
                    j["ts"] = format_iso8601(base + static_cast<Micros>(vm.rank * objects_per_vm() + o + 1) * kMilli);
                    j["pool"] = "vms";
                    j["image_id"] = img.image_id;
                    j["object_id"] = img.objects[b].object_id;
                    j["block"] = b;
                    j["size"] = 4194304;
                    j["format"] = 2;
                    j["features"] = "layering";
                    out += dump(j) + "\n";
                }
            }
        }
    }

    void cephfile_round(std::uint32_t s, std::uint32_t r, std::string& out) const {
        Micros base = round_start(c_, r, c_.schedule.cephfile_rounds);
        const std::uint64_t R = c_.spec.replicas;
        for (const VmModel& vm : c_.vms) {
            if (!vm.ceph) continue;
            std::uint64_t o = 0;
            for (const auto& img : vm.images) {
                for (const auto& obj : img.objects) {
                    for (std::uint32_t j = 0; j < obj.replica_hosts.size(); ++j) {
                        if (obj.replica_hosts[j] != s) continue;
                        std::uint64_t pos = (vm.rank * objects_per_vm() + o) * R + j;
                        out += format_iso8601(base + static_cast<Micros>(pos + 1) * kMilli) + "," +
                               c_.storage_hosts[s] + "," + c_.osd_name(obj.replica_osds[j]) + "," + obj.file + "," +
                               obj.object_id + ",4194304," + format_iso8601(vm.created) + "," +
                               digest_columns(pos, r) + "\n";
                    }
                    ++o;
                }
            }
        }
    }

    static std::string cephfile_header() {
        return "ts,host,osd,file,object_id,size,mtime,version,data_digest,omap_digest,xattr_digest,scrub_stamp,"
               "deep_scrub_stamp,flags\n";
    }

    // Per-scan values; they change every round so no column repeats.
    std::string digest_columns(std::uint64_t pos, std::uint32_t r) const {
        std::uint64_t h = mix64(pos * 0x9e3779b97f4a7c15ULL + r);
        Micros scrub = c_.window_start - 86'400 * kSecond + static_cast<Micros>(h % 86'400) * kSecond +
                       static_cast<Micros>(r) * kMilli;
        return std::to_string(1000 + r) + "'" + std::to_string(h % 100000) + ",0x" + hex(h >> 32, 8) + ",0x" +
               hex(h & 0xffffffffULL, 8) + ",0x" + hex(mix64(h) >> 32, 8) + "," + format_iso8601(scrub) + "," +
               format_iso8601(scrub - 7 * 86'400 * kSecond) + ",dirty|data_digest|omap_digest";
    }

    std::string vm_line(const VmModel& vm, std::uint64_t i) const {
        Micros ts = spread(c_, i, c_.schedule.vm_log_lines) + (vm.slot + 1) * kMilli + 500;
        return syslog_line(ts, "INFO", kCompute, fmt(kVmTemplates[i % kVmTemplates.size()], vm.uuid));
    }

    std::string host_line(std::uint32_t h, std::uint64_t i) const {
        Micros ts = spread(c_, i, c_.schedule.host_log_lines) + 250;
        return syslog_line(ts, "INFO", "nova.compute.resource_tracker",
                           fmt(kHostTemplates[i % kHostTemplates.size()], c_.hosts[h]));
    }

    std::string ceph_line(std::uint32_t s, std::uint64_t i) const {
        Micros ts = spread(c_, i, c_.schedule.ceph_log_lines) + 250;
        std::uint32_t per = c_.spec.osds_per_storage_host;
        std::uint32_t osd = s * per + static_cast<std::uint32_t>(i % per);
        return syslog_line(ts, "INFO", "ceph-osd",
                           fmt(kCephTemplates[i % kCephTemplates.size()], c_.osd_name(osd), c_.storage_hosts[s],
                               hex((i * 37 + s) % 128, 2)));
    }

    void compute_log(std::uint32_t h, std::string& out) const {
        std::vector<std::pair<Micros, std::string>> lines;
        for (std::uint64_t i = 0; i < c_.schedule.host_log_lines; ++i) lines.emplace_back(0, host_line(h, i));
        if (auto it = by_host_.find(h); it != by_host_.end()) {
            for (auto idx : it->second) {
                const VmModel& vm = c_.vms[idx];
                if (!vm.logs) continue;
                for (std::uint64_t i = 0; i < c_.schedule.vm_log_lines; ++i) lines.emplace_back(0, vm_line(vm, i));
                if (vm.fault == FaultKind::FailedMigration) append_migration_lines(vm, lines);
            }
        }
        for (auto& [ts, line] : lines) ts = *parse_iso8601(std::string_view(line).substr(0, line.find(' ')));
        std::stable_sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [_, line] : lines) out += line;
    }

    void ceph_log(std::uint32_t s, std::string& out) const {
        for (std::uint64_t i = 0; i < c_.schedule.ceph_log_lines; ++i) out += ceph_line(s, i);
    }

    void append_migration_lines(const VmModel& vm, std::vector<std::pair<Micros, std::string>>& lines) const {
        const InjectedFault* f = fault_for(vm.uuid);
        std::uint32_t skip = f->spec.skip_lines;
        std::uint32_t other = f->spec.log_lines - skip - c_.schedule.vm_log_lines;
        Micros mid = *vm.libvirt_until;
        Micros span = c_.window_end - mid;
        std::uint32_t n = skip + other;
        // Interleave: skip lines fill the first `skip` of every block of n.
        for (std::uint32_t i = 0; i < n; ++i) {
            Micros ts = mid + static_cast<Micros>((2 * static_cast<unsigned __int128>(i) + 1) * span / (2 * n)) + 750;
            bool is_skip = static_cast<std::uint64_t>(i) * skip / n != static_cast<std::uint64_t>(i + 1) * skip / n;
            std::string msg = is_skip ? fmt("[instance: %s] Instance not resizing, skipping migration.", vm.uuid)
                                      : fmt(kMigrationTemplates[i % kMigrationTemplates.size()], vm.uuid,
                                            c_.hosts[vm.migration_dst]);
            lines.emplace_back(0, syslog_line(ts, is_skip ? "INFO" : "WARNING", kCompute, msg));
        }
    }

    const InjectedFault* fault_for(const std::string& uuid) const {
        for (const auto& f : c_.injected) {
            if (f.target_vm == uuid) return &f;
        }
        fail(ErrorKind::Internal, "fault record missing for " + uuid);
    }

    void db(std::string& out) const {
        std::vector<DbRow> rows;
        std::uint64_t seq = 0;
        auto emit = [&](Micros ts, const char* table, const char* op, const ojson& payload) {
            rows.push_back({ts, seq++, format_iso8601(ts) + "\t" + table + "\t" + op + "\t" + dump(payload) + "\n"});
        };
        Rng rng(derive_seed(c_.seed, "db-requests"));
        auto request = [&] { return "req-" + rng.uuid(); };
        for (const VmModel& vm : c_.vms) {
            Micros t = vm.created;
            emit(t, "nova.instances", "INSERT",
                 ojson{{"uuid", vm.uuid},         {"name", vm.name},     {"vm_state", "building"},
                       {"power_state", 0},         {"vcpus", 2},          {"memory_mb", 4096},
                       {"flavor", "m1.medium"},    {"created_at", format_iso8601(t)}});
            emit(t + kSecond, "nova.instance_actions", "INSERT",
                 ojson{{"action", "create"}, {"uuid", vm.uuid}, {"request_id", request()},
                       {"start_time", format_iso8601(t + kSecond)}});
            emit(t + 5 * kSecond, "neutron.ports", "INSERT",
                 ojson{{"port_id", vm.port_id}, {"uuid", vm.uuid}, {"mac", vm.mac}, {"ip", vm.ip},
                       {"subnet_id", c_.subnet_ids[vm.subnet]}, {"status", "DOWN"}});
            for (const auto& img : vm.images) {
                emit(t + 6 * kSecond, "glance.images", "INSERT",
                     ojson{{"image_id", img.image_id}, {"uuid", vm.uuid}, {"disk_format", "raw"},
                           {"size", 21474836480ULL}, {"status", "active"}});
            }
            emit(t + 30 * kSecond, "nova.instances", "UPDATE",
                 ojson{{"uuid", vm.uuid}, {"vm_state", "active"}, {"power_state", 1}});
            emit(t + 31 * kSecond, "neutron.ports", "UPDATE",
                 ojson{{"port_id", vm.port_id}, {"uuid", vm.uuid}, {"status", "ACTIVE"}});
            if (vm.deleted) {
                Micros d = *vm.deleted;
                emit(d, "nova.instance_actions", "INSERT",
                     ojson{{"action", "delete"}, {"uuid", vm.uuid}, {"request_id", request()},
                           {"start_time", format_iso8601(d)}});
                emit(d + kSecond, "neutron.ports", "DELETE",
                     ojson{{"port_id", vm.port_id}, {"uuid", vm.uuid}, {"mac", vm.mac}, {"ip", vm.ip},
                           {"subnet_id", c_.subnet_ids[vm.subnet]}});
                for (const auto& img : vm.images) {
                    emit(d + 2 * kSecond, "glance.images", "DELETE",
                         ojson{{"image_id", img.image_id}, {"uuid", vm.uuid}, {"status", "deleted"}});
                }
                emit(d + 3 * kSecond, "nova.instances", "UPDATE",
                     ojson{{"uuid", vm.uuid}, {"vm_state", "deleted"}, {"deleted_at", format_iso8601(d)}});
            }
            if (vm.fault == FaultKind::DbPhysicalMismatch) {
                const InjectedFault* f = fault_for(vm.uuid);
                std::uint32_t a = f->spec.actions;
                std::uint32_t ok = a - f->spec.failures;
                for (std::uint32_t i = 0; i < a; ++i) {
                    Micros ts = spread(c_, i, a) + (vm.slot + 1) * kMilli;
                    emit(ts, "nova.instance_actions", "INSERT",
                         ojson{{"action", "reboot"}, {"uuid", vm.uuid}, {"request_id", request()},
                               {"start_time", format_iso8601(ts)}});
                    if (i >= ok) {
                        emit(ts + kMilli, "nova.instance_faults", "INSERT",
                             ojson{{"uuid", vm.uuid}, {"host", c_.hosts[vm.host]}, {"code", 404},
                                   {"message", "Instance " + vm.uuid + " could not be found."}});
                    }
                }
            }
            if (vm.fault == FaultKind::FailedMigration) {
                Micros mid = *vm.libvirt_until;
                emit(mid, "nova.instance_actions", "INSERT",
                     ojson{{"action", "migrate"}, {"uuid", vm.uuid}, {"request_id", request()},
                           {"start_time", format_iso8601(mid)}});
                emit(mid + kSecond, "nova.instance_faults", "INSERT",
                     ojson{{"uuid", vm.uuid}, {"host", c_.hosts[vm.host]}, {"code", 500},
                           {"message", "cannot remove config /etc/libvirt/qemu/" + vm.name +
                                           ".xml: Read-only file system"}});
                emit(mid + 2 * kSecond, "nova.instance_faults", "INSERT",
                     ojson{{"uuid", vm.uuid}, {"host", c_.hosts[vm.migration_dst]}, {"code", 500},
                           {"message", "error removing image"}});
            }
        }
        std::sort(rows.begin(), rows.end(),
                  [](const DbRow& a, const DbRow& b) { return a.ts != b.ts ? a.ts < b.ts : a.seq < b.seq; });
        for (const auto& r : rows) out += r.line;
    }

private:
    std::uint32_t by_host_max_slot(std::uint32_t h) const {
        auto it = by_host_.find(h);
        return it == by_host_.end() || it->second.empty() ? 0 : c_.vms[it->second.back()].slot + 1;
    }

    const Corpus& c_;
    std::map<std::uint32_t, std::vector<std::uint32_t>> by_host_;
};

std::string path_of(const std::string& source, const std::string& host, const char* file) {
    return source + "/" + host + "/" + file;
}

}  // namespace

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) fail(ErrorKind::Internal, "Rng::below(0)");
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
        x = eng_();
    } while (x >= limit);
    return x % n;
}

std::string Rng::uuid() {
    std::uint64_t a = eng_(), b = eng_();
    a = (a & 0xffffffffffff0fffULL) | 0x0000000000004000ULL;
    b = (b & 0x3fffffffffffffffULL) | 0x8000000000000000ULL;
    return hex(a >> 32, 8) + "-" + hex((a >> 16) & 0xffff, 4) + "-" + hex(a & 0xffff, 4) + "-" + hex(b >> 48, 4) +
           "-" + hex(b & 0xffffffffffffULL, 12);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) { return mix64(fnv1a64(purpose, mix64(seed))); }

std::string_view to_string(FaultKind k) {
    switch (k) {
    case FaultKind::OrphanOvsPorts: return "OrphanOvsPorts";
    case FaultKind::DbPhysicalMismatch: return "DbPhysicalMismatch";
    case FaultKind::FailedMigration: return "FailedMigration";
    }
    return "OrphanOvsPorts";
}

std::optional<FaultKind> parse_fault_kind(std::string_view name) {
    for (auto k : {FaultKind::OrphanOvsPorts, FaultKind::DbPhysicalMismatch, FaultKind::FailedMigration}) {
        if (name == to_string(k)) return k;
    }
    if (name == "orphan-ovs-ports") return FaultKind::OrphanOvsPorts;
    if (name == "db-physical-mismatch") return FaultKind::DbPhysicalMismatch;
    if (name == "failed-migration") return FaultKind::FailedMigration;
    return std::nullopt;
}

void FleetSpec::validate() const {
    auto need = [](bool ok, const std::string& what) {
        if (!ok) fail(ErrorKind::Config, "fleet spec: " + what);
    };
    need(n_hosts >= 1, "n_hosts must be at least 1");
    need(n_storage_hosts >= 1, "n_storage_hosts must be at least 1");
    need(osds_per_storage_host >= 1, "osds_per_storage_host must be at least 1");
    need(n_vms >= 1, "n_vms must be at least 1");
    need(n_subnets >= 1, "n_subnets must be at least 1");
    need(images_per_vm >= 1 && blocks_per_image >= 1, "images_per_vm and blocks_per_image must be at least 1");
    need(replicas >= 1 && replicas <= n_storage_hosts, "replicas must be in [1, n_storage_hosts]");
    need(deleted_fraction >= 0.0, "deleted_fraction must be non-negative");
    need(duration_hours > 0 && time_compression > 0, "duration and compression must be positive");
    need(libvirt_period_s > 0 && ovs_period_s > 0 && cephimage_period_s > 0 && cephfile_period_s > 0,
         "snapshot periods must be positive");
    double total = mix.ovs + mix.logs + mix.cephfile + mix.libvirt;
    need(mix.ovs >= 0 && mix.logs >= 0 && mix.cephfile >= 0 && mix.libvirt > 0 && total <= 1.0 + 1e-12,
         "mix targets must be non-negative, Libvirt positive, summing to at most 1");
    need(vm_log_share >= 0 && host_log_share >= 0 && vm_log_share + host_log_share <= 1.0,
         "log shares must be non-negative and sum to at most 1");
    need(n_subnets <= 250, "at most 250 subnets");
}

ojson FleetSpec::to_json() const {
    ojson j;
    j["n_hosts"] = n_hosts;
    j["n_storage_hosts"] = n_storage_hosts;
    j["osds_per_storage_host"] = osds_per_storage_host;
    j["n_vms"] = n_vms;
    j["deleted_fraction"] = deleted_fraction;
    j["n_subnets"] = n_subnets;
    j["images_per_vm"] = images_per_vm;
    j["blocks_per_image"] = blocks_per_image;
    j["replicas"] = replicas;
    j["duration_hours"] = duration_hours;
    j["time_compression"] = time_compression;
    j["periods_s"] = {{"libvirt", libvirt_period_s},
                      {"ovs", ovs_period_s},
                      {"cephimage", cephimage_period_s},
                      {"cephfile", cephfile_period_s}};
    j["mix_targets"] = {{"Ovs", mix.ovs}, {"logs", mix.logs}, {"Cephfile", mix.cephfile}, {"Libvirt", mix.libvirt}};
    return j;
}

const VmModel* Corpus::find_vm(std::string_view uuid) const {
    for (const auto& vm : vms) {
        if (vm.uuid == uuid) return &vm;
    }
    return nullptr;
}

namespace {

void build_fleet(Corpus& c) {
    const FleetSpec& s = c.spec;
    Rng rng(derive_seed(c.seed, "fleet"));
    char buf[64];
    for (std::uint32_t i = 0; i < s.n_hosts + s.n_storage_hosts; ++i) {
        std::snprintf(buf, sizeof buf, "node-%03u", i + 1);
        (i < s.n_hosts ? c.hosts : c.storage_hosts).emplace_back(buf);
    }
    for (std::uint32_t i = 0; i < s.n_subnets; ++i) {
        c.subnet_ids.push_back(rng.uuid());
        c.subnet_cidrs.push_back("10." + std::to_string(i + 1) + ".0.0/16");
    }
    const auto n_deleted = static_cast<std::uint32_t>(std::llround(s.deleted_fraction * s.n_vms));
    const std::uint32_t total = s.n_vms + n_deleted;
    std::vector<std::uint32_t> per_subnet(s.n_subnets, 0);
    std::vector<std::uint32_t> per_host(s.n_hosts, 0);
    for (std::uint32_t g = 0; g < total; ++g) {
        VmModel vm;
        bool live = g < s.n_vms;
        vm.uuid = rng.uuid();
        std::snprintf(buf, sizeof buf, "instance-%08x", 0x1000 + g);
        vm.name = buf;
        vm.subnet = g % s.n_subnets;
        std::uint32_t k = per_subnet[vm.subnet]++;
        vm.ip = "10." + std::to_string(vm.subnet + 1) + "." + std::to_string(k / 250) + "." + std::to_string(k % 250 + 2);
        std::snprintf(buf, sizeof buf, "fa:16:3e:%02x:%02x:%02x", (g >> 16) & 0xff, (g >> 8) & 0xff, g & 0xff);
        vm.mac = buf;
        vm.port_id = rng.uuid();
        vm.ovs_row = rng.uuid();
        vm.iface = "tap" + vm.port_id.substr(0, 11);
        vm.host = g % s.n_hosts;
        for (std::uint32_t i = 0; i < s.images_per_vm; ++i) vm.images.push_back(ImageModel{rng.uuid(), {}});
        if (live) {
            vm.rank = g;
            vm.slot = per_host[vm.host]++;
            vm.created = kWindowStart - (1 + g % 30) * kDay - static_cast<Micros>(g) * 60 * kSecond;
            std::string prefix = hex(rng.next() & 0xffffffffffffULL, 12);
            for (std::uint32_t i = 0; i < s.images_per_vm; ++i) {
                for (std::uint32_t b = 0; b < s.blocks_per_image; ++b) {
                    std::uint32_t o = i * s.blocks_per_image + b;
                    ObjectModel obj;
                    obj.object_id = "rbd_data." + prefix + hex(i, 1) + "." + hex(b, 16);
                    std::uint64_t h = fnv1a64(obj.object_id);
                    obj.file = "current/2." + hex(h % 128, 2) + "_head/" + obj.object_id + "__head_" +
                               hex((h >> 8) & 0xffffffffULL, 8) + "__2";
                    for (std::uint32_t j = 0; j < s.replicas; ++j) {
                        std::uint32_t host = (g + o + j) % s.n_storage_hosts;
                        obj.replica_hosts.push_back(host);
                        obj.replica_osds.push_back(host * s.osds_per_storage_host + (o + j) % s.osds_per_storage_host);
                    }
                    vm.images[i].objects.push_back(std::move(obj));
                }
            }
        } else {
            std::uint32_t d = g - s.n_vms;
            vm.rank = g;
            vm.live_at_start = false;
            vm.created = kWindowStart - 120 * kDay + static_cast<Micros>(d) * 3600 * kSecond;
            vm.deleted = vm.created + 20 * kDay;
            vm.libvirt = vm.ovs = vm.ceph = vm.logs = false;
        }
        c.vms.push_back(std::move(vm));
    }
}

std::uint32_t rounds_for(const FleetSpec& s, double period_s) {
    double window = s.duration_hours * 3600.0;
    return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::floor(window / (period_s * s.time_compression))));
}

void calibrate(Corpus& c) {
    const FleetSpec& s = c.spec;
    Schedule& sch = c.schedule;
    sch.libvirt_rounds = rounds_for(s, s.libvirt_period_s);
    sch.cephimage_rounds = rounds_for(s, s.cephimage_period_s);
    sch.ovs_rounds = sch.cephfile_rounds = 1;
    sch.vm_log_lines = sch.host_log_lines = sch.ceph_log_lines = 12;

    Renderer rd(c);
    std::string buf;
    double libvirt_round = 0, ovs_round = 0, cephfile_round = 0, cephimage_round = 0;
    for (std::uint32_t h = 0; h < c.hosts.size(); ++h) {
        buf.clear();
        rd.libvirt_round(h, 0, buf);
        libvirt_round += buf.size();
        buf.clear();
        rd.ovs_round(h, 0, buf);
        ovs_round += buf.size();
    }
    for (std::uint32_t st = 0; st < c.storage_hosts.size(); ++st) {
        buf.clear();
        rd.cephfile_round(st, 0, buf);
        cephfile_round += buf.size();
    }
    buf.clear();
    rd.cephimage_round(0, buf);
    cephimage_round = static_cast<double>(buf.size());
    buf.clear();
    rd.db(buf);
    double db_bytes = static_cast<double>(buf.size());

    double vm_line = 0, host_line = 0, ceph_line = 0;
    const VmModel& probe = c.vms.front();
    for (std::uint64_t i = 0; i < 12; ++i) {
        vm_line += rd.vm_line(probe, i).size() / 12.0;
        host_line += rd.host_line(0, i).size() / 12.0;
        ceph_line += rd.ceph_line(0, i).size() / 12.0;
    }

    const MixTargets& m = s.mix;
    double fixed = sch.libvirt_rounds * libvirt_round + sch.cephimage_rounds * cephimage_round + db_bytes +
                   c.storage_hosts.size() * Renderer::cephfile_header().size();
    double free_share = 1.0 - m.ovs - m.logs - m.cephfile;
    if (free_share <= 0) fail(ErrorKind::Config, "mix targets leave no room for Libvirt, DB and Cephimage");
    double total = fixed / free_share;
    double libvirt_share = sch.libvirt_rounds * libvirt_round / total;
    if (std::abs(libvirt_share - m.libvirt) > s.mix_tolerance) {
        char msg[320];
        std::snprintf(msg, sizeof msg,
                      "mix target unreachable: Libvirt would hold %.3f of the bytes (target %.2f +/- %.2f); "
                      "DB and Cephimage volume (%.0f bytes) is the binding constraint against %u Libvirt rounds",
                      libvirt_share, m.libvirt, s.mix_tolerance, db_bytes + sch.cephimage_rounds * cephimage_round,
                      sch.libvirt_rounds);
        fail(ErrorKind::Config, msg);
    }
    auto at_least_one = [](double x) { return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::llround(x))); };
    sch.ovs_rounds = m.ovs > 0 ? at_least_one(m.ovs * total / ovs_round) : 1;
    sch.cephfile_rounds = m.cephfile > 0 ? at_least_one(m.cephfile * total / cephfile_round) : 1;
    double log_bytes = m.logs * total;
    std::size_t live = 0;
    for (const auto& vm : c.vms) live += vm.live_at_start ? 1 : 0;
    sch.vm_log_lines = at_least_one(s.vm_log_share * log_bytes / (vm_line * live));
    sch.host_log_lines = at_least_one(s.host_log_share * log_bytes / (host_line * c.hosts.size()));
    sch.ceph_log_lines =
        at_least_one((1.0 - s.vm_log_share - s.host_log_share) * log_bytes / (ceph_line * c.storage_hosts.size()));
    sch.predicted_total_bytes = total;
}

}  // namespace

Corpus generate(const FleetSpec& spec, std::uint64_t seed) {
    spec.validate();
    Corpus c;
    c.spec = spec;
    c.seed = seed;
    c.window_start = kWindowStart;
    c.window_end = kWindowStart + static_cast<Micros>(std::llround(spec.duration_hours * 3600.0)) * kSecond;
    build_fleet(c);
    calibrate(c);
    return c;
}

void inject(Corpus& c, const FaultInjection& f, std::uint64_t seed) {
    VmModel* vm = nullptr;
    if (f.target_vm.empty()) {
        std::vector<VmModel*> healthy;
        for (auto& v : c.vms) {
            if (v.live_at_start && !v.fault) healthy.push_back(&v);
        }
        if (healthy.empty()) fail(ErrorKind::Config, "inject: no healthy live VM left");
        Rng rng(derive_seed(seed, std::string("inject-") + std::string(to_string(f.kind))));
        vm = healthy[rng.below(healthy.size())];
    } else {
        for (auto& v : c.vms) {
            if (v.uuid == f.target_vm) vm = &v;
        }
        if (!vm) fail(ErrorKind::Config, "inject: unknown VM " + f.target_vm);
        if (!vm->live_at_start) fail(ErrorKind::Config, "inject: VM " + f.target_vm + " is not live");
    }
    if (vm->fault) fail(ErrorKind::Config, "inject: VM " + vm->uuid + " already carries a fault");

    InjectedFault rec;
    rec.spec = f;
    rec.target_vm = vm->uuid;
    const Micros span = c.window_end - c.window_start;
    switch (f.kind) {
    case FaultKind::OrphanOvsPorts:
        vm->deleted = c.window_start - 90 * kDay + static_cast<Micros>(vm->rank) * kSecond;
        vm->live_at_start = false;
        vm->libvirt = vm->ceph = vm->logs = false;
        vm->ovs = true;
        rec.details["deleted_at"] = format_iso8601(*vm->deleted);
        rec.details["host"] = c.hosts[vm->host];
        break;
    case FaultKind::DbPhysicalMismatch:
        if (f.failures > f.actions || f.actions == 0) fail(ErrorKind::Config, "inject: failures must not exceed actions");
        vm->deleted = c.window_start - 60 * kDay + static_cast<Micros>(vm->rank) * kSecond;
        rec.details["deleted_at"] = format_iso8601(*vm->deleted);
        rec.details["actions"] = std::to_string(f.actions);
        rec.details["failures"] = std::to_string(f.failures);
        break;
    case FaultKind::FailedMigration: {
        if (c.hosts.size() < 2) fail(ErrorKind::Config, "inject: migration needs two compute hosts");
        if (f.log_lines < f.skip_lines + c.schedule.vm_log_lines) {
            fail(ErrorKind::Config, "inject: " + std::to_string(f.log_lines) + " log lines cannot hold " +
                                        std::to_string(f.skip_lines) + " skip lines plus the VM's " +
                                        std::to_string(c.schedule.vm_log_lines) + " regular lines");
        }
        vm->libvirt_until = c.window_start + span / 2;
        vm->migration_dst = (vm->host + 1) % static_cast<std::uint32_t>(c.hosts.size());
        rec.details["source_host"] = c.hosts[vm->host];
        rec.details["destination_host"] = c.hosts[vm->migration_dst];
        rec.details["migration_start"] = format_iso8601(*vm->libvirt_until);
        rec.details["log_lines"] = std::to_string(f.log_lines);
        rec.details["skip_lines"] = std::to_string(f.skip_lines);
        break;
    }
    }
    vm->fault = f.kind;
    c.injected.push_back(std::move(rec));
}

RenderedCorpus render(const Corpus& c) {
    RenderedCorpus out;
    Renderer rd(c);
    auto put = [&](const std::string& source, const std::string& path, std::string&& bytes) {
        out.bytes_by_source[source] += bytes.size();
        out.files[path] = std::move(bytes);
    };
    for (std::uint32_t h = 0; h < c.hosts.size(); ++h) {
        std::string lv, ov, lg;
        for (std::uint32_t r = 0; r < c.schedule.libvirt_rounds; ++r) rd.libvirt_round(h, r, lv);
        for (std::uint32_t r = 0; r < c.schedule.ovs_rounds; ++r) rd.ovs_round(h, r, ov);
        rd.compute_log(h, lg);
        put("Libvirt", path_of("Libvirt", c.hosts[h], "domstats.jsonl"), std::move(lv));
        put("Ovs", path_of("Ovs", c.hosts[h], "interfaces.jsonl"), std::move(ov));
        put("Log", path_of("Log", c.hosts[h], "nova-compute.log"), std::move(lg));
    }
    for (std::uint32_t s = 0; s < c.storage_hosts.size(); ++s) {
        std::string cf = Renderer::cephfile_header(), cl;
        for (std::uint32_t r = 0; r < c.schedule.cephfile_rounds; ++r) rd.cephfile_round(s, r, cf);
        rd.ceph_log(s, cl);
        put("Cephfile", path_of("Cephfile", c.storage_hosts[s], "osd_files.csv"), std::move(cf));
        put("Cephlog", path_of("Cephlog", c.storage_hosts[s], "ceph-osd.log"), std::move(cl));
    }
    std::string ci;
    for (std::uint32_t r = 0; r < c.schedule.cephimage_rounds; ++r) rd.cephimage_round(r, ci);
    put("Cephimage", path_of("Cephimage", c.storage_hosts.front(), "rbd_images.jsonl"), std::move(ci));
    std::string db;
    rd.db(db);
    put("DB", path_of("DB", "controller", "nova_triggers.log"), std::move(db));
    return out;
}

std::map<std::string, double> mix_fractions(const std::map<std::string, std::uint64_t>& bytes) {
    double total = 0;
    for (const auto& [_, b] : bytes) total += static_cast<double>(b);
    std::map<std::string, double> out{{"Ovs", 0}, {"logs", 0}, {"Cephfile", 0}, {"Libvirt", 0}, {"other", 0}};
    if (total == 0) return out;
    for (const auto& [src, b] : bytes) {
        std::string bucket = src == "Ovs" || src == "Cephfile" || src == "Libvirt" ? src
                             : src == "Log" || src == "Cephlog"                      ? "logs"
                                                                                     : "other";
        out[bucket] += static_cast<double>(b) / total;
    }
    return out;
}

ojson ground_truth(const Corpus& c, const RenderedCorpus& rendered) {
    ojson j;
    j["seed"] = c.seed;
    j["spec"] = c.spec.to_json();
    j["window"] = {{"start", format_iso8601(c.window_start)}, {"end", format_iso8601(c.window_end)}};
    j["schedule"] = {{"libvirt_rounds", c.schedule.libvirt_rounds},
                     {"ovs_rounds", c.schedule.ovs_rounds},
                     {"cephimage_rounds", c.schedule.cephimage_rounds},
                     {"cephfile_rounds", c.schedule.cephfile_rounds},
                     {"vm_log_lines", c.schedule.vm_log_lines},
                     {"host_log_lines", c.schedule.host_log_lines},
                     {"ceph_log_lines", c.schedule.ceph_log_lines}};
    j["hosts"] = c.hosts;
    j["storage_hosts"] = c.storage_hosts;
    ojson subnets = ojson::array();
    for (std::size_t i = 0; i < c.subnet_ids.size(); ++i) {
        subnets.push_back({{"subnet_id", c.subnet_ids[i]}, {"cidr", c.subnet_cidrs[i]}});
    }
    j["subnets"] = subnets;
    ojson vms = ojson::array();
    for (const auto& vm : c.vms) {
        ojson v;
        v["uuid"] = vm.uuid;
        v["name"] = vm.name;
        v["host"] = vm.libvirt ? ojson(c.hosts[vm.host]) : ojson(nullptr);
        v["subnet_id"] = c.subnet_ids[vm.subnet];
        v["ip"] = vm.ip;
        v["mac"] = vm.mac;
        v["port_id"] = vm.port_id;
        v["deleted"] = vm.deleted.has_value();
        v["fault"] = vm.fault ? ojson(std::string(to_string(*vm.fault))) : ojson(nullptr);
        ojson images = ojson::array();
        for (const auto& img : vm.images) {
            ojson objs = ojson::array();
            if (vm.ceph) {
                for (const auto& o : img.objects) {
                    ojson reps = ojson::array();
                    for (std::size_t r = 0; r < o.replica_hosts.size(); ++r) {
                        reps.push_back({{"host", c.storage_hosts[o.replica_hosts[r]]},
                                        {"osd", c.osd_name(o.replica_osds[r])}});
                    }
                    objs.push_back({{"object_id", o.object_id}, {"file", o.file}, {"replicas", reps}});
                }
            }
            images.push_back({{"image_id", img.image_id}, {"objects", objs}});
        }
        v["images"] = images;
        vms.push_back(std::move(v));
    }
    j["vms"] = vms;
    ojson injected = ojson::array();
    ojson expected = ojson::array();
    for (const auto& f : c.injected) {
        injected.push_back({{"kind", std::string(to_string(f.spec.kind))}, {"target_vm", f.target_vm}, {"details", f.details}});
        expected.push_back(f.target_vm);
    }
    j["injected"] = injected;
    j["expected_anomalies"] = expected;
    j["bytes_by_source"] = rendered.bytes_by_source;
    j["mix"] = mix_fractions(rendered.bytes_by_source);
    return j;
}

void write_corpus(const Corpus& c, const fs::path& dir, bool overwrite) {
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!overwrite) fail(ErrorKind::Config, "corpus directory exists: " + dir.string() + " (use --force)");
        fs::remove_all(dir);
    }
    RenderedCorpus r = render(c);
    auto write = [&](const fs::path& p, const std::string& bytes) {
        fs::create_directories(p.parent_path());
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        f.close();
        if (!f) fail(ErrorKind::Input, "cannot write " + p.string());
    };
    for (const auto& [path, bytes] : r.files) write(dir / path, bytes);
    write(dir / "ground_truth.json", ground_truth(c, r).dump(2) + "\n");
}

}  // namespace sosg
