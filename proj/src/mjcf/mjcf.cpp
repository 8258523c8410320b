// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>
#include <morphoforge/mjcf/mjcf.hpp>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <array>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>

namespace morphoforge::mjcf
{

namespace pt = boost::property_tree;

namespace
{
    constexpr std::string_view growth_prefix = "growth:";
    constexpr std::string_view symmetry_prefix = "symmetry:";

    auto escape(std::string_view text) -> std::string
    {
        std::string out;
        out.reserve(text.size());
        for (char c: text)
        {
            switch (c)
            {
                case '&': out += "&amp;"; break;
                case '<': out += "&lt;"; break;
                case '>': out += "&gt;"; break;
                case '"': out += "&quot;"; break;
                case '\'': out += "&apos;"; break;
                default: out += c;
            }
        }
        return out;
    }

    auto join(std::vector<double> const& values) -> std::string
    {
        std::string out;
        for (auto v: values)
        {
            if (!out.empty())
                out += ' ';
            out += format_real(v);
        }
        return out;
    }

    auto rgba_text(Rgba const& c) -> std::string { return join({ c.r, c.g, c.b, c.a }); }
    auto quat_text(Orientation const& q) -> std::string { return join({ q.w, q.x, q.y, q.z }); }

    auto joint_element_name(BodyNode const& node) -> std::string { return node.name + "_joint"; }

    class Writer
    {
      public:
        void open(int depth, std::string_view tag, std::vector<std::pair<std::string, std::string>> const& attrs,
                  bool self_closing)
        {
            _out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << '<' << tag;
            for (auto const& [k, v]: attrs)
                _out << ' ' << k << "=\"" << escape(v) << '"';
            _out << (self_closing ? "/>\n" : ">\n");
        }
        void close(int depth, std::string_view tag)
        {
            _out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << "</" << tag << ">\n";
        }
        [[nodiscard]] auto str() const -> std::string { return _out.str(); }

      private:
        std::ostringstream _out;
    };

    void emit_body(Writer& w, KinematicTree const& tree, NodeId id, int depth)
    {
        auto const& node = tree.node(id);
        w.open(depth, "body", { { "name", node.name }, { "pos", format_vec(node.anchor_local) } }, false);
        std::visit(
            [&](auto const& joint) {
                using T = std::decay_t<decltype(joint)>;
                if constexpr (std::is_same_v<T, Hinge>)
                    w.open(depth + 1, "joint",
                           { { "name", joint_element_name(node) },
                             { "type", "hinge" },
                             { "axis", format_vec(joint.axis) },
                             { "range", join({ joint.range_lo, joint.range_hi }) } },
                           true);
                else if constexpr (std::is_same_v<T, Ball>)
                    w.open(depth + 1, "joint", { { "name", joint_element_name(node) }, { "type", "ball" } }, true);
                else if constexpr (std::is_same_v<T, Free>)
                    w.open(depth + 1, "freejoint", { { "name", joint_element_name(node) } }, true);
            },
            node.joint);

        std::vector<std::pair<std::string, std::string>> geom {
            { "name", node.name + "_geom" },
            { "type", std::string(shape_name(node.geom.shape)) },
            { "size", join(shape_params(node.geom.shape)) },
            { "pos", format_vec(node.geom.local_pos) },
        };
        if (node.geom.local_orient != Orientation {})
            geom.emplace_back("quat", quat_text(node.geom.local_orient));
        geom.emplace_back("rgba", rgba_text(node.geom.color));
        w.open(depth + 1, "geom", geom, true);

        for (auto child: tree.children(id))
            emit_body(w, tree, child, depth + 1);
        w.close(depth, "body");
    }

    // --- parsing -----------------------------------------------------------------

    auto attrs_of(pt::ptree const& element) -> pt::ptree const*
    {
        auto const it = element.find("<xmlattr>");
        return it == element.not_found() ? nullptr : &it->second;
    }

    auto attr(pt::ptree const& element, std::string const& key) -> std::optional<std::string>
    {
        if (auto const* a = attrs_of(element))
            if (auto v = a->get_optional<std::string>(key))
                return *v;
        return std::nullopt;
    }

    auto require_attr(pt::ptree const& element, std::string_view tag, std::string const& key) -> std::string
    {
        auto v = attr(element, key);
        if (!v)
            throw Error(ErrorCode::SubsetViolation, "<" + std::string(tag) + "> is missing attribute '" + key + "'");
        return *v;
    }

    auto numbers(std::string_view text, std::string_view what) -> std::vector<double>
    {
        std::vector<double> out;
        std::size_t i = 0;
        while (i < text.size())
        {
            while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
                ++i;
            if (i == text.size())
                break;
            auto j = i;
            while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])))
                ++j;
            double value = 0.0;
            auto const* first = text.data() + i;
            auto const* last = text.data() + j;
            if (*first == '+')
                ++first;
            auto const [ptr, ec] = std::from_chars(first, last, value);
            if (ec != std::errc {} || ptr != last)
                throw Error(ErrorCode::SubsetViolation,
                            "invalid number '" + std::string(text.substr(i, j - i)) + "' in " + std::string(what));
            out.push_back(value);
            i = j;
        }
        return out;
    }

    auto fixed_numbers(std::string_view text, std::size_t count, std::string_view what) -> std::vector<double>
    {
        auto values = numbers(text, what);
        if (values.size() != count)
            throw Error(ErrorCode::SubsetViolation,
                        std::string(what) + " needs " + std::to_string(count) + " numbers, got "
                            + std::to_string(values.size()));
        return values;
    }

    auto vec_attr(pt::ptree const& element, std::string const& key, Vec3 fallback, std::string_view what) -> Vec3
    {
        auto const text = attr(element, key);
        if (!text)
            return fallback;
        auto const v = fixed_numbers(*text, 3, what);
        return { v[0], v[1], v[2] };
    }

    auto is_markup(std::string const& key) -> bool
    {
        return key == "<xmlattr>" || key == "<xmlcomment>" || key == "<xmltext>";
    }

    struct CustomData
    {
        std::map<std::string, Vec3, std::less<>> growth;
        std::map<std::string, SymmetryTag, std::less<>> symmetry;
    };

    auto read_custom(pt::ptree const& custom) -> CustomData
    {
        CustomData out;
        for (auto const& [key, child]: custom)
        {
            if (is_markup(key))
                continue;
            auto const name = require_attr(child, key, "name");
            auto const data = require_attr(child, key, "data");
            if (key == "numeric" && name.starts_with(growth_prefix))
            {
                auto const v = fixed_numbers(data, 3, "growth data");
                out.growth[name.substr(growth_prefix.size())] = { v[0], v[1], v[2] };
            }
            else if (key == "text" && name.starts_with(symmetry_prefix))
            {
                try
                {
                    out.symmetry[name.substr(symmetry_prefix.size())] = SymmetryTag::parse(data);
                }
                catch (Error const& e)
                {
                    throw Error(ErrorCode::SubsetViolation, e.detail());
                }
            }
            else if (key != "numeric" && key != "text")
                throw Error(ErrorCode::UnsupportedElement, "unsupported custom element <" + key + ">");
        }
        return out;
    }

    struct BodyParser
    {
        KinematicTree tree;
        std::map<std::string, std::string, std::less<>> joint_names; // joint element name -> kind

        void body(pt::ptree const& element, std::optional<NodeId> parent)
        {
            BodyNode node;
            node.name = require_attr(element, "body", "name");
            if (node.name.empty())
                throw Error(ErrorCode::SubsetViolation, "body name is empty");
            node.anchor_local = vec_attr(element, "pos", {}, "body pos");
            node.joint = Fixed {};

            int joints = 0;
            int geoms = 0;
            std::vector<pt::ptree const*> children;
            for (auto const& [key, child]: element)
            {
                if (is_markup(key))
                    continue;
                if (key == "body")
                    children.push_back(&child);
                else if (key == "geom")
                {
                    if (++geoms > 1)
                        throw Error(ErrorCode::SubsetViolation, "body '" + node.name + "' has more than one geom");
                    node.geom = geom(child, node.name);
                }
                else if (key == "joint" || key == "freejoint")
                {
                    if (++joints > 1)
                        throw Error(ErrorCode::SubsetViolation, "body '" + node.name + "' has more than one joint");
                    node.joint = joint(child, key, node.name);
                }
                else
                    throw Error(ErrorCode::UnsupportedElement, "unsupported element <" + key + "> in body '" + node.name + "'");
            }
            if (geoms == 0)
                throw Error(ErrorCode::SubsetViolation, "body '" + node.name + "' has no geom");

            NodeId id;
            try
            {
                id = tree.add_node(parent, std::move(node));
            }
            catch (Error const& e)
            {
                throw Error(ErrorCode::SubsetViolation, e.detail());
            }
            for (auto const* child: children)
                body(*child, id);
        }

        auto geom(pt::ptree const& element, std::string const& body_name) -> GeomSpec
        {
            GeomSpec g;
            auto const type = attr(element, "type").value_or("sphere");
            if (attr(element, "fromto"))
                throw Error(ErrorCode::SubsetViolation, "geom fromto is outside the supported subset");
            if (attr(element, "euler") || attr(element, "axisangle") || attr(element, "xyaxes") || attr(element, "zaxis"))
                throw Error(ErrorCode::SubsetViolation, "geom orientation must be given as quat");
            auto const size = numbers(require_attr(element, "geom", "size"), "geom size");
            if (type == "sphere")
            {
                if (size.empty())
                    throw Error(ErrorCode::SubsetViolation, "sphere needs a radius");
                g.shape = Ellipsoid { { size[0], size[0], size[0] } };
            }
            else if (type == "box" || type == "ellipsoid" || type == "capsule")
            {
                try
                {
                    g.shape = make_shape(type, size);
                }
                catch (Error const& e)
                {
                    throw Error(ErrorCode::SubsetViolation, "geom of body '" + body_name + "': " + e.detail());
                }
            }
            else
                throw Error(ErrorCode::UnsupportedElement, "geom type '" + type + "' is not supported");
            g.local_pos = vec_attr(element, "pos", {}, "geom pos");
            if (auto const q = attr(element, "quat"))
            {
                auto const v = fixed_numbers(*q, 4, "geom quat");
                g.local_orient = { v[0], v[1], v[2], v[3] };
            }
            if (auto const c = attr(element, "rgba"))
            {
                auto const v = fixed_numbers(*c, 4, "geom rgba");
                g.color = { v[0], v[1], v[2], v[3] };
            }
            return g;
        }

        auto joint(pt::ptree const& element, std::string const& key, std::string const& body_name) -> JointSpec
        {
            auto const name = attr(element, "name").value_or(body_name + "_joint");
            if (key == "freejoint")
            {
                joint_names[name] = "free";
                return Free {};
            }
            auto const type = attr(element, "type").value_or("hinge");
            joint_names[name] = type;
            if (type == "ball")
                return Ball {};
            if (type == "free")
                return Free {};
            if (type != "hinge")
                throw Error(ErrorCode::UnsupportedElement, "joint type '" + type + "' is not supported");
            Hinge h;
            h.axis = vec_attr(element, "axis", { 0, 0, 1 }, "joint axis");
            auto const range = attr(element, "range");
            if (!range)
                throw Error(ErrorCode::SubsetViolation, "hinge of body '" + body_name + "' has no range");
            auto const r = fixed_numbers(*range, 2, "joint range");
            h.range_lo = r[0];
            h.range_hi = r[1];
            return h;
        }
    };

    void check_actuators(pt::ptree const& actuator, std::map<std::string, std::string, std::less<>> const& joints)
    {
        for (auto const& [key, child]: actuator)
        {
            if (is_markup(key))
                continue;
            if (key != "motor" && key != "general")
                throw Error(ErrorCode::UnsupportedElement, "unsupported actuator <" + key + ">");
            auto const target = require_attr(child, key, "joint");
            auto const it = joints.find(target);
            if (it == joints.end())
                throw Error(ErrorCode::SubsetViolation, "actuator targets unknown joint '" + target + "'");
            if (it->second == "free")
                throw Error(ErrorCode::SubsetViolation, "actuator targets free joint '" + target + "'");
        }
    }
} // namespace

auto emit(KinematicTree const& tree, std::string_view model_name) -> std::string
{
    audit_structure(tree);
    Writer w;
    w.open(0, "mujoco", { { "model", std::string(model_name) } }, false);
    w.open(1, "compiler", { { "angle", "radian" }, { "autolimits", "true" } }, true);
    w.open(1, "worldbody", {}, false);
    emit_body(w, tree, tree.root(), 2);
    w.close(1, "worldbody");

    auto const order = tree.topological_order();
    bool any_actuator = false;
    for (auto id: order)
        any_actuator = any_actuator || std::holds_alternative<Hinge>(tree.node(id).joint)
                       || std::holds_alternative<Ball>(tree.node(id).joint);
    if (!any_actuator)
        w.open(1, "actuator", {}, true);
    else
    {
        w.open(1, "actuator", {}, false);
        for (auto id: order)
        {
            auto const& node = tree.node(id);
            auto const joint = joint_element_name(node);
            if (std::holds_alternative<Hinge>(node.joint))
                w.open(2, "motor", { { "name", joint + "_motor" }, { "joint", joint }, { "gear", "1" } }, true);
            else if (std::holds_alternative<Ball>(node.joint))
            {
                static constexpr std::array<std::string_view, 3> gears { "1 0 0", "0 1 0", "0 0 1" };
                for (std::size_t k = 0; k < gears.size(); ++k)
                    w.open(2, "general",
                           { { "name", joint + "_rot" + std::to_string(k) },
                             { "joint", joint },
                             { "gear", std::string(gears[k]) } },
                           true);
            }
        }
        w.close(1, "actuator");
    }

    w.open(1, "custom", {}, false);
    for (auto id: order)
    {
        auto const& node = tree.node(id);
        w.open(2, "numeric",
               { { "name", std::string(growth_prefix) + node.name }, { "size", "3" }, { "data", format_vec(node.growth_dir) } },
               true);
    }
    for (auto id: order)
    {
        auto const& node = tree.node(id);
        if (node.symmetry.tagged())
            w.open(2, "text", { { "name", std::string(symmetry_prefix) + node.name }, { "data", node.symmetry.to_string() } },
                   true);
    }
    w.close(1, "custom");
    w.close(0, "mujoco");
    return w.str();
}

auto parse_model(std::string_view text) -> ParsedModel
{
    pt::ptree doc;
    try
    {
        std::istringstream in { std::string(text) };
        pt::read_xml(in, doc, pt::xml_parser::trim_whitespace);
    }
    catch (pt::xml_parser_error const& e)
    {
        throw Error(ErrorCode::MalformedXml, e.message() + " at line " + std::to_string(e.line()));
    }

    auto const root_it = doc.find("mujoco");
    if (root_it == doc.not_found())
        throw Error(ErrorCode::SubsetViolation, "document has no <mujoco> root element");
    for (auto const& [key, child]: doc)
        if (!is_markup(key) && key != "mujoco")
            throw Error(ErrorCode::SubsetViolation, "unexpected top-level element <" + key + ">");
    auto const& mujoco = root_it->second;

    ParsedModel out;
    out.model_name = attr(mujoco, "model").value_or("robot");
    BodyParser bodies;
    CustomData custom;
    pt::ptree const* actuator = nullptr;
    bool saw_worldbody = false;

    for (auto const& [key, child]: mujoco)
    {
        if (is_markup(key))
            continue;
        if (key == "compiler")
        {
            if (attr(child, "angle").value_or("degree") != "radian")
                throw Error(ErrorCode::SubsetViolation, "compiler angle must be radian");
        }
        else if (key == "worldbody")
        {
            if (saw_worldbody)
                throw Error(ErrorCode::SubsetViolation, "more than one <worldbody>");
            saw_worldbody = true;
            int count = 0;
            for (auto const& [k, body]: child)
            {
                if (is_markup(k))
                    continue;
                if (k != "body")
                    throw Error(k == "geom" || k == "light" || k == "camera" || k == "site"
                                    ? ErrorCode::SubsetViolation
                                    : ErrorCode::UnsupportedElement,
                                "<" + k + "> directly under worldbody is outside the supported subset");
                if (++count > 1)
                    throw Error(ErrorCode::SubsetViolation, "worldbody must hold exactly one root body");
                bodies.body(body, std::nullopt);
            }
        }
        else if (key == "actuator")
            actuator = &child;
        else if (key == "custom")
            custom = read_custom(child);
        else
            throw Error(ErrorCode::UnsupportedElement, "unsupported element <" + key + ">");
    }
    if (bodies.tree.empty())
        throw Error(ErrorCode::SubsetViolation, "document defines no bodies");
    if (actuator)
        check_actuators(*actuator, bodies.joint_names);

    auto& tree = bodies.tree;
    for (std::size_t i = 0; i < tree.size(); ++i)
    {
        auto& node = tree.node(NodeId { i });
        if (auto const it = custom.growth.find(node.name); it != custom.growth.end())
            node.growth_dir = it->second;
        else if (node.parent && norm(node.anchor_local) > 0.0)
            node.growth_dir = normalized(node.anchor_local);
        if (auto const it = custom.symmetry.find(node.name); it != custom.symmetry.end())
            node.symmetry = it->second;
    }
    out.tree = std::move(tree);
    return out;
}

auto parse(std::string_view text) -> KinematicTree
{
    return parse_model(text).tree;
}

auto summarize(KinematicTree const& tree) -> std::string
{
    std::string out;
    for (auto id: tree.topological_order())
    {
        auto const& n = tree.node(id);
        out += n.name;
        out += " parent=" + (n.parent ? tree.node(*n.parent).name : std::string("-"));
        out += " joint=" + std::string(joint_name(n.joint));
        if (auto const* h = std::get_if<Hinge>(&n.joint))
            out += " axis=" + format_vec(h->axis) + " range=" + join({ h->range_lo, h->range_hi });
        if (n.parent)
            out += " growth=" + format_vec(n.growth_dir);
        out += " shape=" + std::string(shape_name(n.geom.shape));
        out += " size=" + join(shape_params(n.geom.shape));
        out += " rgba=" + rgba_text(n.geom.color);
        out += " symmetry=" + n.symmetry.to_string();
        out += '\n';
    }
    return out;
}

auto count_elements(std::string_view text) -> DocumentCounts
{
    DocumentCounts c;
    auto const count = [&](std::string_view needle) {
        int n = 0;
        for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + 1))
            ++n;
        return n;
    };
    c.bodies = count("<body ");
    c.joints = count("<joint ");
    c.actuators = count("<motor ") + count("<general ");
    return c;
}

} // namespace morphoforge::mjcf
