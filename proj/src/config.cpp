#include "vclink/config.hpp"

#include "vclink/error.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace vclink {

namespace {

using boost::property_tree::ptree;

class Element {
public:
    Element(const ptree& pt, std::string path) : pt_(pt), path_(std::move(path)) {}

    const std::string& path() const { return path_; }

    [[noreturn]] void fail(const std::string& what) const { throw ValidationError(path_ + ": " + what); }

    std::optional<std::string> attr(const std::string& name) const
    {
        if (auto a = pt_.get_child_optional("<xmlattr>." + name)) return a->data();
        return std::nullopt;
    }

    std::string require_attr(const std::string& name) const
    {
        auto a = attr(name);
        if (!a) fail("missing attribute '" + name + "'");
        return *a;
    }

    void allow_attrs(std::initializer_list<std::string_view> names) const
    {
        if (auto attrs = pt_.get_child_optional("<xmlattr>"))
            for (const auto& [name, _] : *attrs)
                if (std::find(names.begin(), names.end(), name) == names.end())
                    fail("unknown attribute '" + name + "'");
    }

    // Calls `fn(name, element)` for every child element; rejects names not in `allowed`.
    template <class Fn>
    void children(std::initializer_list<std::string_view> allowed, Fn&& fn) const
    {
        std::size_t index = 0;
        for (const auto& [name, child] : pt_) {
            if (name == "<xmlattr>" || name == "<xmlcomment>") continue;
            ++index;
            const Element e(child, path_ + "/" + name + "[" + std::to_string(index) + "]");
            if (std::find(allowed.begin(), allowed.end(), name) == allowed.end())
                throw ValidationError(e.path() + ": unknown element <" + name + ">");
            fn(name, e);
        }
    }

    template <class T>
    T number(const std::string& name, std::optional<T> fallback = std::nullopt) const
    {
        auto a = attr(name);
        if (!a) {
            if (fallback) return *fallback;
            fail("missing attribute '" + name + "'");
        }
        return parse_number<T>(*a, name);
    }

    template <class T>
    T parse_number(const std::string& text, const std::string& what) const
    {
        T v{};
        const char* b = text.data();
        const char* e = text.data() + text.size();
        while (b < e && *b == ' ') ++b;
        auto [p, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || p != e || b == e) fail("bad numeric value '" + text + "' for " + what);
        return v;
    }

    // <tag value="..."/> elements.
    template <class T>
    T value() const
    {
        allow_attrs({"value"});
        return parse_number<T>(require_attr("value"), "value");
    }
    std::string text_value() const
    {
        allow_attrs({"value"});
        return require_attr("value");
    }

private:
    const ptree& pt_;
    std::string path_;
};

NodeType parse_node_type(const Element& e)
{
    e.allow_attrs({"id"});
    NodeType t;
    t.id = e.number<int>("id");
    const std::string who = "nodeType id=" + std::to_string(t.id);
    std::optional<std::string> model;
    e.children({"model", "routing", "selection", "arbitration", "clockDelay"}, [&](const std::string& name, const Element& c) {
        if (name == "model")
            model = c.text_value();
        else if (name == "routing")
            t.routing = parse_routing(c.text_value());
        else if (name == "selection")
            t.selection = parse_selection(c.text_value());
        else if (name == "arbitration")
            t.arbitration = parse_arbitration(c.text_value());
        else if (name == "clockDelay")
            t.clock_delay = c.value<unsigned>();
    });
    if (!model) throw ValidationError(e.path() + ": " + who + " has no <model> element");
    if (*model == "RouterVC")
        t.model = NodeModel::RouterVC;
    else if (*model == "ProcessingElementVC")
        t.model = NodeModel::ProcessingElementVC;
    else
        throw ValidationError(e.path() + ": " + who + ": unknown model '" + *model +
                              "' (expected RouterVC or ProcessingElementVC)");
    if (t.clock_delay < 1) throw ValidationError(e.path() + ": " + who + ": clockDelay must be >= 1");
    return t;
}

std::vector<NodeType> parse_node_types(const Element& e)
{
    e.allow_attrs({});
    std::vector<NodeType> out;
    e.children({"nodeType"}, [&](const std::string&, const Element& c) {
        auto t = parse_node_type(c);
        for (const auto& o : out)
            if (o.id == t.id) throw ValidationError(c.path() + ": duplicate nodeType id " + std::to_string(t.id));
        out.push_back(t);
    });
    return out;
}

const NodeType& find_type(const std::vector<NodeType>& types, int id, NodeModel model, const Element& where)
{
    for (const auto& t : types)
        if (t.id == id) {
            if (t.model != model)
                where.fail("nodeType " + std::to_string(id) + " is not a " +
                           (model == NodeModel::RouterVC ? "RouterVC" : "ProcessingElementVC"));
            return t;
        }
    where.fail("reference to undefined nodeType " + std::to_string(id));
}

std::optional<int> first_of(const std::vector<NodeType>& types, NodeModel model)
{
    for (const auto& t : types)
        if (t.model == model) return t.id;
    return std::nullopt;
}

struct TopologyNode {
    Coord pos;
    std::optional<std::string> name;
    std::optional<int> router_type;
    std::optional<int> pe_type;
    std::string path;
};

PayloadSource parse_payload(const Element& e, unsigned flit_width, std::size_t index,
                            const std::filesystem::path& base_dir)
{
    const auto kind = e.require_attr("kind");
    const auto default_seed = static_cast<std::uint64_t>(1000 + index);
    if (kind == "uniform" || kind == "gaussian" || kind == "lognormal") {
        e.allow_attrs({"kind", "width", "length", "sigma", "rho", "seed"});
        StreamSpec s;
        s.distribution = parse_distribution(kind);
        s.width = e.number<unsigned>("width", flit_width);
        s.length = e.number<std::size_t>("length", std::size_t{100000});
        s.sigma = e.number<double>("sigma", s.distribution == Distribution::Uniform ? 0.0 : std::optional<double>{});
        s.rho = e.number<double>("rho", 0.0);
        s.seed = e.number<std::uint64_t>("seed", default_seed);
        return s;
    }
    if (kind == "correlated-msb") {
        e.allow_attrs({"kind", "msbs", "rho", "length", "seed"});
        CorrelatedMsbPayload c;
        c.msb_count = e.number<unsigned>("msbs", 8u);
        c.rho = e.number<double>("rho", 0.99);
        c.length = e.number<std::size_t>("length", std::size_t{100000});
        c.seed = e.number<std::uint64_t>("seed", default_seed);
        return c;
    }
    if (kind == "image") {
        e.allow_attrs({"kind", "width", "height", "brightness", "noise", "seed"});
        SyntheticImagePayload im;
        im.width = e.number<unsigned>("width", 512u);
        im.height = e.number<unsigned>("height", 512u);
        im.brightness = e.number<double>("brightness", 1.0);
        im.noise = e.number<double>("noise", 2.0);
        im.seed = e.number<std::uint64_t>("seed", default_seed);
        return im;
    }
    if (kind == "file") {
        e.allow_attrs({"kind", "path", "format"});
        PayloadFile f;
        f.path = e.require_attr("path");
        if (f.path.is_relative() && !base_dir.empty()) f.path = base_dir / f.path;
        const auto fmt = e.attr("format").value_or("raw");
        if (fmt == "raw")
            f.format = PayloadFormat::Raw;
        else if (fmt == "pgm")
            f.format = PayloadFormat::Pgm;
        else if (fmt == "stream")
            f.format = PayloadFormat::StreamBinary;
        else if (fmt == "csv")
            f.format = PayloadFormat::StreamCsv;
        else
            e.fail("unknown payload file format '" + fmt + "' (expected raw, pgm, stream or csv)");
        return f;
    }
    e.fail("unknown payload kind '" + kind + "' (expected uniform, gaussian, lognormal, correlated-msb, image or file)");
}

Coord coord_attr(const Element& e, const std::string& name)
{
    try {
        return parse_coord(e.require_attr(name));
    } catch (const ValidationError& err) {
        e.fail(err.what());
    }
}

}  // namespace

SimulationConfig parse_config_string(std::string_view xml, const std::filesystem::path& base_dir,
                                     const std::string& source)
{
    ptree doc;
    try {
        std::istringstream in{std::string(xml)};
        boost::property_tree::read_xml(in, doc, boost::property_tree::xml_parser::no_comments);
    } catch (const boost::property_tree::xml_parser_error& e) {
        throw ValidationError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }

    SimulationConfig cfg;
    std::size_t roots = 0;
    for (const auto& [name, _] : doc) {
        (void)_;
        ++roots;
    }
    if (roots != 1) throw ValidationError(source + ": expected exactly one root element");
    const auto& [root_name, root_pt] = *doc.begin();

    if (root_name == "nodeTypes") {
        cfg.node_types = parse_node_types(Element(root_pt, source + ":/nodeTypes"));
        if (auto r = first_of(cfg.node_types, NodeModel::RouterVC)) {
            const auto& t = *std::find_if(cfg.node_types.begin(), cfg.node_types.end(),
                                          [&](const NodeType& n) { return n.id == *r; });
            cfg.network.router.routing = t.routing;
            cfg.network.router.selection = t.selection;
            cfg.network.router.arbitration = t.arbitration;
            cfg.network.router.clock_delay = t.clock_delay;
        }
        if (auto p = first_of(cfg.node_types, NodeModel::ProcessingElementVC))
            for (const auto& t : cfg.node_types)
                if (t.id == *p) cfg.network.pe_clock_delay = t.clock_delay;
        cfg.network.validate();
        return cfg;
    }
    if (root_name != "simulation")
        throw ValidationError(source + ": unknown root element <" + root_name + "> (expected <simulation>)");

    const Element root(root_pt, source + ":/simulation");
    root.allow_attrs({});

    std::optional<Element> topo_el, traffic_el;
    int dims[3] = {1, 1, 1};
    std::vector<LayerExtent> layers;
    std::vector<TopologyNode> nodes;
    std::optional<int> router_type_id, pe_type_id;
    auto& net = cfg.network;

    root.children({"nodeTypes", "topology", "flitWidth", "bufferDepth", "vcCount", "flitsPerPacket", "niQueueDepth",
                   "clockPeriod", "cycles", "seed", "traffic"},
                  [&](const std::string& name, const Element& c) {
                      if (name == "nodeTypes")
                          cfg.node_types = parse_node_types(c);
                      else if (name == "topology")
                          topo_el.emplace(c);
                      else if (name == "flitWidth")
                          net.flit_width = c.value<unsigned>();
                      else if (name == "bufferDepth")
                          net.router.buffer_depth = c.value<unsigned>();
                      else if (name == "vcCount")
                          net.router.vc_count = c.value<unsigned>();
                      else if (name == "flitsPerPacket")
                          net.flits_per_packet = c.value<unsigned>();
                      else if (name == "niQueueDepth")
                          net.ni_queue_depth = c.value<unsigned>();
                      else if (name == "clockPeriod")
                          net.clock_period = c.value<double>();
                      else if (name == "cycles")
                          cfg.cycles = c.value<std::uint64_t>();
                      else if (name == "seed")
                          cfg.seed = c.value<std::uint64_t>();
                      else if (name == "traffic")
                          traffic_el.emplace(c);
                  });

    if (topo_el) {
        const auto& t = *topo_el;
        t.allow_attrs({"routerType", "peType"});
        if (auto a = t.attr("routerType")) router_type_id = t.parse_number<int>(*a, "routerType");
        if (auto a = t.attr("peType")) pe_type_id = t.parse_number<int>(*a, "peType");
        bool have_dims = false;
        t.children({"dimensions", "layer", "node"}, [&](const std::string& name, const Element& c) {
            if (name == "dimensions") {
                c.allow_attrs({"x", "y", "z"});
                dims[0] = c.number<int>("x");
                dims[1] = c.number<int>("y");
                dims[2] = c.number<int>("z", 1);
                have_dims = true;
            } else if (name == "layer") {
                c.allow_attrs({"z", "xMin", "xMax", "yMin", "yMax"});
                layers.push_back({c.number<int>("z"), c.number<int>("xMin"), c.number<int>("xMax"),
                                  c.number<int>("yMin"), c.number<int>("yMax")});
            } else {
                c.allow_attrs({"x", "y", "z", "name", "routerType", "peType"});
                TopologyNode n;
                n.pos = {c.number<int>("x"), c.number<int>("y"), c.number<int>("z", 0)};
                n.name = c.attr("name");
                if (auto a = c.attr("routerType")) n.router_type = c.parse_number<int>(*a, "routerType");
                if (auto a = c.attr("peType")) n.pe_type = c.parse_number<int>(*a, "peType");
                n.path = c.path();
                nodes.push_back(n);
            }
        });
        if (!have_dims) t.fail("missing <dimensions> element");
    }
    try {
        net.topology = Topology(dims[0], dims[1], dims[2], layers);
    } catch (const ValidationError& e) {
        throw ValidationError(source + ":/simulation/topology: " + e.what());
    }

    const Element types_where(root_pt, source + ":/simulation/nodeTypes");
    if (!router_type_id) router_type_id = first_of(cfg.node_types, NodeModel::RouterVC);
    if (!pe_type_id) pe_type_id = first_of(cfg.node_types, NodeModel::ProcessingElementVC);
    if (router_type_id) {
        const auto& rt = find_type(cfg.node_types, *router_type_id, NodeModel::RouterVC, types_where);
        net.router.routing = rt.routing;
        net.router.selection = rt.selection;
        net.router.arbitration = rt.arbitration;
        net.router.clock_delay = rt.clock_delay;
    }
    if (pe_type_id)
        net.pe_clock_delay = find_type(cfg.node_types, *pe_type_id, NodeModel::ProcessingElementVC, types_where).clock_delay;

    for (const auto& n : nodes) {
        const Element where(root_pt, n.path);
        const auto idx = net.topology.index_of(n.pos);
        if (!idx) where.fail("node (" + n.pos.str() + ") is not part of the topology");
        if (n.name) {
            for (const auto& [other, nm] : net.node_names)
                if (nm == *n.name) where.fail("duplicate node name '" + *n.name + "'");
            net.node_names[*idx] = *n.name;
        }
        if (n.router_type) {
            const auto& rt = find_type(cfg.node_types, *n.router_type, NodeModel::RouterVC, where);
            if (rt.arbitration != net.router.arbitration || rt.routing != net.router.routing)
                where.fail("per-node router types may only differ in clockDelay");
            net.router_delay[*idx] = rt.clock_delay;
        }
        if (n.pe_type)
            net.pe_delay[*idx] =
                find_type(cfg.node_types, *n.pe_type, NodeModel::ProcessingElementVC, where).clock_delay;
    }
    try {
        net.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(source + ":/simulation: " + e.what());
    }

    if (traffic_el) {
        const auto& t = *traffic_el;
        t.allow_attrs({});
        t.children({"source"}, [&](const std::string&, const Element& c) {
            c.allow_attrs({"name", "node", "destination", "rate", "flitRate", "priority"});
            const std::size_t k = cfg.traffic.size();
            InjectionSpec s;
            s.name = c.attr("name").value_or("s" + std::to_string(k + 1));
            for (const auto& o : cfg.traffic)
                if (o.name == s.name) c.fail("duplicate traffic source name '" + s.name + "'");
            s.source = coord_attr(c, "node");
            s.destination = coord_attr(c, "destination");
            const auto rate = c.attr("rate");
            const auto flit_rate = c.attr("flitRate");
            if (rate.has_value() == flit_rate.has_value()) c.fail("exactly one of 'rate' or 'flitRate' is required");
            s.rate = rate ? c.parse_number<double>(*rate, "rate")
                          : c.parse_number<double>(*flit_rate, "flitRate") / net.flits_per_packet;
            s.priority = c.number<unsigned>("priority", 0u);
            s.type_id = static_cast<std::uint32_t>(k);
            bool have_payload = false;
            c.children({"payload"}, [&](const std::string&, const Element& p) {
                if (have_payload) p.fail("only one <payload> per source");
                s.payload = parse_payload(p, net.flit_width, k, base_dir);
                have_payload = true;
            });
            if (!have_payload) c.fail("missing <payload> element");
            try {
                validate_traffic({s}, net.topology, net.flit_width);
            } catch (const ValidationError& e) {
                c.fail(e.what());
            }
            cfg.traffic.push_back(std::move(s));
        });
    }
    return cfg;
}

SimulationConfig parse_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_string(ss.str(), path.parent_path(), path.string());
}

std::vector<InjectionSpec> load_traffic_spec(const std::filesystem::path& path)
{
    return parse_config(path).traffic;
}

}  // namespace vclink
