#pragma once

#include <iomanip>

#include "init.hpp"
#include "io.hpp"

namespace i2ipr {

// Corpus layout on disk:
//   <root>/manifest.txt             one record id per line
//   <root>/<id>/target.igrd         clean image
//   <root>/<id>/meas.i2im           magnitude measurements
//   <root>/<id>/init_NNN.igrd       crude estimates, ascending residual
//   <root>/<id>/init_manifest.txt   "file,residual,seed" per estimate
struct DatasetRecord {
    std::string id;
    ImageGrid target;
    MagnitudeMeasurements meas;
    InitEnsemble ensemble; // may be empty before initialization ran
};

inline std::string record_id(int index) {
    std::ostringstream os;
    os << "rec_" << std::setw(5) << std::setfill('0') << index;
    return os.str();
}

inline void write_manifest(const std::string& root, const std::vector<std::string>& ids) {
    io::atomic_write(root + "/manifest.txt", [&](std::ostream& os) {
        for (const std::string& id : ids) os << id << "\n";
    });
}

inline std::vector<std::string> read_manifest(const std::string& root) {
    std::ifstream is(root + "/manifest.txt");
    if (!is) throw std::runtime_error("cannot open manifest: " + root + "/manifest.txt");
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) ids.push_back(line);
    return ids;
}

inline void write_ensemble(const std::string& dir, const InitEnsemble& ensemble) {
    std::vector<std::string> files;
    for (size_t i = 0; i < ensemble.estimates.size(); ++i) {
        std::ostringstream name;
        name << "init_" << std::setw(3) << std::setfill('0') << i << ".igrd";
        write_igrd(dir + "/" + name.str(), ensemble.estimates[i]);
        files.push_back(name.str());
    }
    io::atomic_write(dir + "/init_manifest.txt", [&](std::ostream& os) {
        os.precision(17);
        for (size_t i = 0; i < files.size(); ++i)
            os << files[i] << "," << ensemble.residuals[i] << ","
               << (i < ensemble.seeds.size() ? ensemble.seeds[i] : 0) << "\n";
    });
}

inline InitEnsemble read_ensemble(const std::string& dir) {
    std::ifstream is(dir + "/init_manifest.txt");
    if (!is) throw std::runtime_error("cannot open ensemble manifest in: " + dir);
    InitEnsemble ensemble;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const size_t c1 = line.find(',');
        const size_t c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw std::runtime_error("bad ensemble manifest line: " + line);
        ensemble.estimates.push_back(read_igrd(dir + "/" + line.substr(0, c1)));
        ensemble.residuals.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
        ensemble.seeds.push_back(std::stoull(line.substr(c2 + 1)));
    }
    if (ensemble.estimates.empty()) throw std::runtime_error("empty ensemble in: " + dir);
    ensemble.mean = like(ensemble.estimates.front());
    for (const ImageGrid& g : ensemble.estimates)
        for (size_t i = 0; i < ensemble.mean.values.size(); ++i)
            ensemble.mean.values[i] += g.values[i] / ensemble.estimates.size();
    return ensemble;
}

inline void write_record(const std::string& root, const DatasetRecord& rec) {
    const std::string dir = root + "/" + rec.id;
    std::filesystem::create_directories(dir);
    write_igrd(dir + "/target.igrd", rec.target);
    write_i2im(dir + "/meas.i2im", rec.meas);
    if (!rec.ensemble.estimates.empty()) write_ensemble(dir, rec.ensemble);
}

inline DatasetRecord read_record(const std::string& root, const std::string& id,
                                 bool need_ensemble = true) {
    DatasetRecord rec;
    rec.id = id;
    const std::string dir = root + "/" + id;
    rec.target = read_igrd(dir + "/target.igrd");
    rec.meas = read_i2im(dir + "/meas.i2im");
    if (need_ensemble) rec.ensemble = read_ensemble(dir);
    return rec;
}

// FNV-1a, used for the deterministic validation split.
inline uint64_t stable_hash(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline bool is_validation_record(const std::string& id) { return stable_hash(id) % 10 == 0; }

} // namespace i2ipr
