#pragma once

// Synthetic OpenStack/Ceph operations corpus with known topology, a
// calibrated byte mix across sources, and three injectable fault archetypes.

#include "sosg/common.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace sosg {

struct MixTargets {
    double ovs = 0.50;
    double logs = 0.24;  // Log + Cephlog
    double cephfile = 0.15;
    double libvirt = 0.09;
};

struct FleetSpec {
    std::uint32_t n_hosts = 20;          // compute hosts
    std::uint32_t n_storage_hosts = 6;   // Ceph OSD hosts, no VMs
    std::uint32_t osds_per_storage_host = 2;
    std::uint32_t n_vms = 200;           // live VMs
    double deleted_fraction = 0.25;      // extra VMs deleted before the window, relative to n_vms
    std::uint32_t n_subnets = 10;
    std::uint32_t images_per_vm = 2;
    std::uint32_t blocks_per_image = 3;
    std::uint32_t replicas = 3;
    double duration_hours = 3.0;
    double time_compression = 3.0;  // nominal snapshot periods are multiplied by this
    double libvirt_period_s = 60;
    double ovs_period_s = 60;
    double cephimage_period_s = 600;
    double cephfile_period_s = 3600;
    MixTargets mix;
    double mix_tolerance = 0.05;
    // Split of the log budget.
    double vm_log_share = 0.70;
    double host_log_share = 0.20;  // the rest goes to Cephlog

    void validate() const;
    nlohmann::ordered_json to_json() const;
};

enum class FaultKind : std::uint8_t { OrphanOvsPorts, DbPhysicalMismatch, FailedMigration };

std::string_view to_string(FaultKind k);
std::optional<FaultKind> parse_fault_kind(std::string_view name);

struct FaultInjection {
    FaultKind kind = FaultKind::OrphanOvsPorts;
    std::string target_vm;  // uuid; empty picks a healthy live VM from the seed
    std::uint32_t actions = 1707;  // DbPhysicalMismatch
    std::uint32_t failures = 1704;
    std::uint32_t log_lines = 1653;  // FailedMigration, total lines naming the VM
    std::uint32_t skip_lines = 653;
};

struct ObjectModel {
    std::string object_id;
    std::string file;
    std::vector<std::uint32_t> replica_hosts;  // storage host indices
    std::vector<std::uint32_t> replica_osds;   // global osd numbers
};

struct ImageModel {
    std::string image_id;
    std::vector<ObjectModel> objects;
};

struct VmModel {
    std::string uuid;
    std::string name;
    std::uint32_t host = 0;  // compute host index
    std::uint32_t slot = 0;  // position among the live VMs of that host
    std::uint32_t rank = 0;  // position among live VMs
    std::uint32_t subnet = 0;
    std::string ip, mac, port_id, ovs_row, iface;
    std::vector<ImageModel> images;
    Micros created = 0;
    std::optional<Micros> deleted;  // set for VMs deleted before the window
    bool live_at_start = true;
    // Fault state.
    std::optional<FaultKind> fault;
    bool libvirt = true, ovs = true, ceph = true, logs = true;
    std::optional<Micros> libvirt_until;
    std::uint32_t migration_dst = 0;
};

struct Schedule {
    std::uint32_t libvirt_rounds = 0, ovs_rounds = 0, cephimage_rounds = 0, cephfile_rounds = 0;
    std::uint32_t vm_log_lines = 0;     // per live VM
    std::uint32_t host_log_lines = 0;   // per compute host
    std::uint32_t ceph_log_lines = 0;   // per storage host
    double predicted_total_bytes = 0;
};

struct InjectedFault {
    FaultInjection spec;
    std::string target_vm;
    std::map<std::string, std::string> details;
};

struct Corpus {
    FleetSpec spec;
    std::uint64_t seed = 0;
    Micros window_start = 0;
    Micros window_end = 0;
    std::vector<std::string> hosts;          // compute
    std::vector<std::string> storage_hosts;
    std::vector<std::string> subnet_ids;
    std::vector<std::string> subnet_cidrs;
    std::vector<VmModel> vms;                // live first, then deleted
    Schedule schedule;
    std::vector<InjectedFault> injected;

    const VmModel* find_vm(std::string_view uuid) const;
    std::string osd_name(std::uint32_t osd) const { return "osd." + std::to_string(osd); }
};

/// Builds the fleet model and calibrates the schedule so the rendered byte mix
/// meets spec.mix. Throws Error(Config) naming the binding constraint when the
/// targets cannot be met.
Corpus generate(const FleetSpec& spec, std::uint64_t seed);

/// Applies one fault to the model. The schedule stays frozen.
void inject(Corpus& corpus, const FaultInjection& fault, std::uint64_t seed);

struct RenderedCorpus {
    std::map<std::string, std::string> files;  // corpus-relative path -> bytes
    std::map<std::string, std::uint64_t> bytes_by_source;
};

RenderedCorpus render(const Corpus& corpus);

/// Byte fractions per mix bucket: Ovs, logs, Cephfile, Libvirt, other.
std::map<std::string, double> mix_fractions(const std::map<std::string, std::uint64_t>& bytes_by_source);

nlohmann::ordered_json ground_truth(const Corpus& corpus, const RenderedCorpus& rendered);

/// Writes `<dir>/<source>/<host>/<file>` and `<dir>/ground_truth.json`.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir, bool overwrite = false);

/// Deterministic generator helpers (portable across standard libraries).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    std::uint64_t next() { return eng_(); }
    std::uint64_t below(std::uint64_t n);  // uniform in [0, n)
    std::string uuid();

private:
    std::mt19937_64 eng_;
};

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose);

}  // namespace sosg
