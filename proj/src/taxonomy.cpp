#include <fstream>
#include <sstream>

#include <json.hpp>

#include "scidocbench/corpus.hpp"
#include "scidocbench/errors.hpp"

namespace sdb::corpus {

namespace {

std::vector<TaxonomyField> shipped_fields() {
    std::vector<TaxonomyField> f;
    f.push_back({"CS",
                 "Computer Science",
                 {"cs"},
                 {{"cs.AI", "Artificial Intelligence"},
                  {"cs.AR", "Hardware Architecture"},
                  {"cs.CC", "Computational Complexity"},
                  {"cs.CE", "Computational Engineering, Finance, and Science"},
                  {"cs.CG", "Computational Geometry"},
                  {"cs.CL", "Computation and Language"},
                  {"cs.CR", "Cryptography and Security"},
                  {"cs.CV", "Computer Vision and Pattern Recognition"},
                  {"cs.CY", "Computers and Society"},
                  {"cs.DB", "Databases"},
                  {"cs.DC", "Distributed, Parallel, and Cluster Computing"},
                  {"cs.DL", "Digital Libraries"},
                  {"cs.DM", "Discrete Mathematics"},
                  {"cs.DS", "Data Structures and Algorithms"},
                  {"cs.ET", "Emerging Technologies"},
                  {"cs.FL", "Formal Languages and Automata Theory"},
                  {"cs.GL", "General Literature"},
                  {"cs.GR", "Graphics"},
                  {"cs.GT", "Computer Science and Game Theory"},
                  {"cs.HC", "Human-Computer Interaction"},
                  {"cs.IR", "Information Retrieval"},
                  {"cs.IT", "Information Theory"},
                  {"cs.LG", "Machine Learning"},
                  {"cs.LO", "Logic in Computer Science"},
                  {"cs.MA", "Multiagent Systems"},
                  {"cs.MM", "Multimedia"},
                  {"cs.MS", "Mathematical Software"},
                  {"cs.NA", "Numerical Analysis"},
                  {"cs.NE", "Neural and Evolutionary Computing"},
                  {"cs.NI", "Networking and Internet Architecture"},
                  {"cs.OH", "Other Computer Science"},
                  {"cs.OS", "Operating Systems"},
                  {"cs.PF", "Performance"},
                  {"cs.PL", "Programming Languages"},
                  {"cs.RO", "Robotics"},
                  {"cs.SC", "Symbolic Computation"},
                  {"cs.SD", "Sound"},
                  {"cs.SE", "Software Engineering"},
                  {"cs.SI", "Social and Information Networks"},
                  {"cs.SY", "Systems and Control"}}});
    f.push_back({"Math",
                 "Mathematics",
                 {"math"},
                 {{"math.AC", "Commutative Algebra"},
                  {"math.AG", "Algebraic Geometry"},
                  {"math.AP", "Analysis of PDEs"},
                  {"math.AT", "Algebraic Topology"},
                  {"math.CA", "Classical Analysis and ODEs"},
                  {"math.CO", "Combinatorics"},
                  {"math.CT", "Category Theory"},
                  {"math.CV", "Complex Variables"},
                  {"math.DG", "Differential Geometry"},
                  {"math.DS", "Dynamical Systems"},
                  {"math.FA", "Functional Analysis"},
                  {"math.GM", "General Mathematics"},
                  {"math.GN", "General Topology"},
                  {"math.GR", "Group Theory"},
                  {"math.GT", "Geometric Topology"},
                  {"math.HO", "History and Overview"},
                  {"math.IT", "Information Theory"},
                  {"math.KT", "K-Theory and Homology"},
                  {"math.LO", "Logic"},
                  {"math.MG", "Metric Geometry"},
                  {"math.MP", "Mathematical Physics"},
                  {"math.NA", "Numerical Analysis"},
                  {"math.NT", "Number Theory"},
                  {"math.OA", "Operator Algebras"},
                  {"math.OC", "Optimization and Control"},
                  {"math.PR", "Probability"},
                  {"math.QA", "Quantum Algebra"},
                  {"math.RA", "Rings and Algebras"},
                  {"math.RT", "Representation Theory"},
                  {"math.SG", "Symplectic Geometry"},
                  {"math.SP", "Spectral Theory"},
                  {"math.ST", "Statistics Theory"}}});
    f.push_back({"Phys",
                 "Physics",
                 {"astro-ph", "cond-mat", "gr-qc", "hep-ex", "hep-lat", "hep-ph", "hep-th", "math-ph", "nlin",
                  "nucl-ex", "nucl-th", "physics", "quant-ph"},
                 {{"astro-ph.CO", "Cosmology and Nongalactic Astrophysics"},
                  {"astro-ph.EP", "Earth and Planetary Astrophysics"},
                  {"astro-ph.GA", "Astrophysics of Galaxies"},
                  {"astro-ph.HE", "High Energy Astrophysical Phenomena"},
                  {"astro-ph.IM", "Instrumentation and Methods for Astrophysics"},
                  {"astro-ph.SR", "Solar and Stellar Astrophysics"},
                  {"cond-mat.dis-nn", "Disordered Systems and Neural Networks"},
                  {"cond-mat.mes-hall", "Mesoscale and Nanoscale Physics"},
                  {"cond-mat.mtrl-sci", "Materials Science"},
                  {"cond-mat.other", "Other Condensed Matter"},
                  {"cond-mat.quant-gas", "Quantum Gases"},
                  {"cond-mat.soft", "Soft Condensed Matter"},
                  {"cond-mat.stat-mech", "Statistical Mechanics"},
                  {"cond-mat.str-el", "Strongly Correlated Electrons"},
                  {"cond-mat.supr-con", "Superconductivity"},
                  {"gr-qc", "General Relativity and Quantum Cosmology"},
                  {"hep-ex", "High Energy Physics - Experiment"},
                  {"hep-lat", "High Energy Physics - Lattice"},
                  {"hep-ph", "High Energy Physics - Phenomenology"},
                  {"hep-th", "High Energy Physics - Theory"},
                  {"math-ph", "Mathematical Physics"},
                  {"nlin.AO", "Adaptation and Self-Organizing Systems"},
                  {"nlin.CD", "Chaotic Dynamics"},
                  {"nlin.CG", "Cellular Automata and Lattice Gases"},
                  {"nlin.PS", "Pattern Formation and Solitons"},
                  {"nlin.SI", "Exactly Solvable and Integrable Systems"},
                  {"nucl-ex", "Nuclear Experiment"},
                  {"nucl-th", "Nuclear Theory"},
                  {"physics.acc-ph", "Accelerator Physics"},
                  {"physics.ao-ph", "Atmospheric and Oceanic Physics"},
                  {"physics.app-ph", "Applied Physics"},
                  {"physics.atm-clus", "Atomic and Molecular Clusters"},
                  {"physics.atom-ph", "Atomic Physics"},
                  {"physics.bio-ph", "Biological Physics"},
                  {"physics.chem-ph", "Chemical Physics"},
                  {"physics.class-ph", "Classical Physics"},
                  {"physics.comp-ph", "Computational Physics"},
                  {"physics.data-an", "Data Analysis, Statistics and Probability"},
                  {"physics.ed-ph", "Physics Education"},
                  {"physics.flu-dyn", "Fluid Dynamics"},
                  {"physics.gen-ph", "General Physics"},
                  {"physics.geo-ph", "Geophysics"},
                  {"physics.hist-ph", "History and Philosophy of Physics"},
                  {"physics.ins-det", "Instrumentation and Detectors"},
                  {"physics.med-ph", "Medical Physics"},
                  {"physics.optics", "Optics"},
                  {"physics.plasm-ph", "Plasma Physics"},
                  {"physics.pop-ph", "Popular Physics"},
                  {"physics.soc-ph", "Physics and Society"},
                  {"physics.space-ph", "Space Physics"},
                  {"quant-ph", "Quantum Physics"}}});
    f.push_back({"EESS",
                 "Electrical Engineering and Systems Science",
                 {"eess"},
                 {{"eess.AS", "Audio and Speech Processing"},
                  {"eess.IV", "Image and Video Processing"},
                  {"eess.SP", "Signal Processing"},
                  {"eess.SY", "Systems and Control"}}});
    f.push_back({"Econ",
                 "Economics",
                 {"econ"},
                 {{"econ.EM", "Econometrics"}, {"econ.GN", "General Economics"}, {"econ.TH", "Theoretical Economics"}}});
    f.push_back({"Stat",
                 "Statistics",
                 {"stat"},
                 {{"stat.AP", "Applications"},
                  {"stat.CO", "Computation"},
                  {"stat.ME", "Methodology"},
                  {"stat.ML", "Machine Learning"},
                  {"stat.OT", "Other Statistics"},
                  {"stat.TH", "Statistics Theory"}}});
    return f;
}

}  // namespace

bool TaxonomyField::contains(std::string_view code) const {
    for (const auto& s : subcategories) {
        if (s.code == code) return true;
    }
    return false;
}

SubcategoryTaxonomy::SubcategoryTaxonomy(std::vector<TaxonomyField> fields) : fields_(std::move(fields)) {
    std::set<std::string> names;
    for (const auto& f : fields_) {
        if (f.name.empty()) throw InvalidArgument("taxonomy field with empty name");
        if (!names.insert(f.name).second) throw InvalidArgument("duplicate taxonomy field " + f.name);
        std::set<std::string> codes;
        for (const auto& s : f.subcategories) {
            if (!codes.insert(s.code).second) {
                throw InvalidArgument("duplicate subcategory " + s.code + " in field " + f.name);
            }
        }
    }
}

const SubcategoryTaxonomy& SubcategoryTaxonomy::shipped() {
    static const SubcategoryTaxonomy taxonomy(shipped_fields());
    return taxonomy;
}

const TaxonomyField* SubcategoryTaxonomy::find(std::string_view field_name) const {
    for (const auto& f : fields_) {
        if (f.name == field_name) return &f;
    }
    return nullptr;
}

const TaxonomyField* SubcategoryTaxonomy::field_for_archive(std::string_view archive) const {
    for (const auto& f : fields_) {
        for (const auto& a : f.archives) {
            if (a == archive) return &f;
        }
    }
    return nullptr;
}

bool SubcategoryTaxonomy::operator==(const SubcategoryTaxonomy& other) const {
    if (fields_.size() != other.fields_.size()) return false;
    for (std::size_t i = 0; i < fields_.size(); ++i) {
        const auto& a = fields_[i];
        const auto& b = other.fields_[i];
        if (a.name != b.name || a.title != b.title || a.archives != b.archives ||
            a.subcategories.size() != b.subcategories.size()) {
            return false;
        }
        for (std::size_t k = 0; k < a.subcategories.size(); ++k) {
            if (a.subcategories[k].code != b.subcategories[k].code ||
                a.subcategories[k].name != b.subcategories[k].name) {
                return false;
            }
        }
    }
    return true;
}

std::string SubcategoryTaxonomy::to_json() const {
    nlohmann::ordered_json root;
    root["fields"] = nlohmann::ordered_json::array();
    for (const auto& f : fields_) {
        nlohmann::ordered_json jf;
        jf["name"] = f.name;
        jf["title"] = f.title;
        jf["archives"] = f.archives;
        jf["subcategories"] = nlohmann::ordered_json::array();
        for (const auto& s : f.subcategories) jf["subcategories"].push_back({{"code", s.code}, {"name", s.name}});
        root["fields"].push_back(std::move(jf));
    }
    return root.dump(2) + "\n";
}

SubcategoryTaxonomy SubcategoryTaxonomy::from_json(std::string_view text) {
    auto root = nlohmann::json::parse(text, nullptr, false);
    if (root.is_discarded() || !root.is_object() || !root.contains("fields") || !root["fields"].is_array()) {
        throw InvalidArgument("taxonomy must be an object with a 'fields' array");
    }
    try {
        std::vector<TaxonomyField> fields;
        for (const auto& jf : root["fields"]) {
            TaxonomyField f;
            f.name = jf.at("name").get<std::string>();
            f.title = jf.value("title", f.name);
            if (jf.contains("archives")) f.archives = jf["archives"].get<std::vector<std::string>>();
            for (const auto& js : jf.at("subcategories")) {
                f.subcategories.push_back({js.at("code").get<std::string>(), js.value("name", std::string())});
            }
            fields.push_back(std::move(f));
        }
        return SubcategoryTaxonomy(std::move(fields));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed taxonomy: ") + e.what());
    }
}

SubcategoryTaxonomy SubcategoryTaxonomy::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open taxonomy " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void check_subcategories(const AbstractRecord& record, const SubcategoryTaxonomy& taxonomy) {
    std::vector<const TaxonomyField*> fields;
    for (const auto& label : record.field_labels) {
        if (const auto* f = taxonomy.field_for_archive(label)) fields.push_back(f);
    }
    if (fields.empty()) return;
    for (const auto& sub : record.subcategories) {
        bool ok = false;
        for (const auto* f : fields) ok = ok || f->contains(sub);
        if (!ok) {
            throw InvalidArgument("record " + record.id + ": subcategory " + sub + " not in taxonomy of its field");
        }
    }
}

}  // namespace sdb::corpus
