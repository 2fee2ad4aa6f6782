//! GraphML and edge-list serialization plus atomic file output.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use quick_xml::events::Event;
use quick_xml::Reader;

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyDomain {
    Graph,
    Node,
    Edge,
}

impl KeyDomain {
    fn as_str(self) -> &'static str {
        match self {
            KeyDomain::Graph => "graph",
            KeyDomain::Node => "node",
            KeyDomain::Edge => "edge",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "graph" => Ok(KeyDomain::Graph),
            "node" => Ok(KeyDomain::Node),
            "edge" => Ok(KeyDomain::Edge),
            other => Err(Error::Graphml(format!("unsupported key domain `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyDef {
    pub id: String,
    pub domain: KeyDomain,
    pub attr_type: String,
}

impl KeyDef {
    pub fn new(id: &str, domain: KeyDomain, attr_type: &str) -> Self {
        KeyDef {
            id: id.to_owned(),
            domain,
            attr_type: attr_type.to_owned(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphmlNode {
    pub id: String,
    pub data: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphmlEdge {
    pub source: String,
    pub target: String,
    pub data: Vec<(String, String)>,
}

/// In-memory GraphML document. Emission order is the stored order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphmlDoc {
    pub graph_id: String,
    pub directed: bool,
    pub keys: Vec<KeyDef>,
    pub graph_data: Vec<(String, String)>,
    pub nodes: Vec<GraphmlNode>,
    pub edges: Vec<GraphmlEdge>,
}

impl GraphmlDoc {
    pub fn new(graph_id: &str, directed: bool) -> Self {
        GraphmlDoc {
            graph_id: graph_id.to_owned(),
            directed,
            keys: Vec::new(),
            graph_data: Vec::new(),
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn graph_value(&self, key: &str) -> Option<&str> {
        lookup(&self.graph_data, key)
    }

    pub fn to_xml(&self) -> String {
        let mut s = String::new();
        s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
        for k in &self.keys {
            let _ = writeln!(
                s,
                "  <key id=\"{0}\" for=\"{1}\" attr.name=\"{0}\" attr.type=\"{2}\"/>",
                escape(&k.id),
                k.domain.as_str(),
                escape(&k.attr_type)
            );
        }
        let _ = writeln!(
            s,
            "  <graph id=\"{}\" edgedefault=\"{}\">",
            escape(&self.graph_id),
            if self.directed {
                "directed"
            } else {
                "undirected"
            }
        );
        for (k, v) in &self.graph_data {
            let _ = writeln!(s, "    <data key=\"{}\">{}</data>", escape(k), escape(v));
        }
        for n in &self.nodes {
            if n.data.is_empty() {
                let _ = writeln!(s, "    <node id=\"{}\"/>", escape(&n.id));
                continue;
            }
            let _ = writeln!(s, "    <node id=\"{}\">", escape(&n.id));
            for (k, v) in &n.data {
                let _ = writeln!(s, "      <data key=\"{}\">{}</data>", escape(k), escape(v));
            }
            s.push_str("    </node>\n");
        }
        for e in &self.edges {
            let head = format!(
                "<edge source=\"{}\" target=\"{}\"",
                escape(&e.source),
                escape(&e.target)
            );
            if e.data.is_empty() {
                let _ = writeln!(s, "    {head}/>");
                continue;
            }
            let _ = writeln!(s, "    {head}>");
            for (k, v) in &e.data {
                let _ = writeln!(s, "      <data key=\"{}\">{}</data>", escape(k), escape(v));
            }
            s.push_str("    </edge>\n");
        }
        s.push_str("  </graph>\n</graphml>\n");
        s
    }

    pub fn from_xml(xml: &str) -> Result<Self> {
        let mut reader = Reader::from_str(xml);
        let mut doc = GraphmlDoc::new("", true);
        enum Owner {
            Graph,
            Node,
            Edge,
        }
        let mut owner = Owner::Graph;
        let mut data_key: Option<String> = None;
        let mut data_text = String::new();
        let err = |e: quick_xml::Error| Error::Graphml(e.to_string());

        loop {
            let event = reader.read_event().map_err(err)?;
            match event {
                Event::Start(ref e) | Event::Empty(ref e) => {
                    let is_empty = matches!(event, Event::Empty(_));
                    let mut attrs = Vec::new();
                    for a in e.attributes() {
                        let a = a.map_err(|e| Error::Graphml(e.to_string()))?;
                        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
                        let val = a.unescape_value().map_err(err)?.into_owned();
                        attrs.push((key, val));
                    }
                    let attr = |name: &str| lookup(&attrs, name).map(str::to_owned);
                    match e.name().as_ref() {
                        b"key" => doc.keys.push(KeyDef {
                            id: attr("id")
                                .ok_or_else(|| Error::Graphml("key without id".into()))?,
                            domain: KeyDomain::parse(&attr("for").unwrap_or_default())?,
                            attr_type: attr("attr.type").unwrap_or_else(|| "string".into()),
                        }),
                        b"graph" => {
                            doc.graph_id = attr("id").unwrap_or_default();
                            doc.directed = attr("edgedefault").as_deref() != Some("undirected");
                            owner = Owner::Graph;
                        }
                        b"node" => {
                            doc.nodes.push(GraphmlNode {
                                id: attr("id")
                                    .ok_or_else(|| Error::Graphml("node without id".into()))?,
                                data: Vec::new(),
                            });
                            owner = if is_empty { Owner::Graph } else { Owner::Node };
                        }
                        b"edge" => {
                            doc.edges.push(GraphmlEdge {
                                source: attr("source")
                                    .ok_or_else(|| Error::Graphml("edge without source".into()))?,
                                target: attr("target")
                                    .ok_or_else(|| Error::Graphml("edge without target".into()))?,
                                data: Vec::new(),
                            });
                            owner = if is_empty { Owner::Graph } else { Owner::Edge };
                        }
                        b"data" => {
                            let key = attr("key")
                                .ok_or_else(|| Error::Graphml("data without key".into()))?;
                            if is_empty {
                                push_data(&mut doc, &owner, key, String::new());
                            } else {
                                data_key = Some(key);
                                data_text.clear();
                            }
                        }
                        _ => {}
                    }
                }
                Event::Text(t) => {
                    if data_key.is_some() {
                        data_text.push_str(&t.unescape().map_err(err)?);
                    }
                }
                Event::End(e) => match e.name().as_ref() {
                    b"data" => {
                        if let Some(key) = data_key.take() {
                            push_data(&mut doc, &owner, key, std::mem::take(&mut data_text));
                        }
                    }
                    b"node" | b"edge" => owner = Owner::Graph,
                    _ => {}
                },
                Event::Eof => break,
                _ => {}
            }
        }

        fn push_data(doc: &mut GraphmlDoc, owner: &Owner, key: String, value: String) {
            let slot = match owner {
                Owner::Graph => &mut doc.graph_data,
                Owner::Node => &mut doc.nodes.last_mut().expect("open node").data,
                Owner::Edge => &mut doc.edges.last_mut().expect("open edge").data,
            };
            slot.push((key, value));
        }
        Ok(doc)
    }
}

pub(crate) fn lookup<'a>(pairs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    pairs
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
}

fn escape(s: &str) -> String {
    quick_xml::escape::escape(s).into_owned()
}

/// `source,target,weight` CSV with one row per edge.
pub fn edgelist_csv<'a>(
    edges: impl IntoIterator<Item = (&'a str, &'a str, u64)>,
) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["source", "target", "weight"])?;
    for (s, t, weight) in edges {
        w.write_record([s, t, &weight.to_string()])?;
    }
    w.into_inner().map_err(|e| Error::Stream(e.into_error()))
}

pub fn read_edgelist_csv<R: std::io::Read>(input: R) -> Result<Vec<(String, String, u64)>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let weight = row
            .get(2)
            .and_then(|w| w.parse::<u64>().ok())
            .ok_or_else(|| Error::Config(format!("bad edge weight in row {:?}", row)))?;
        out.push((row[0].to_owned(), row[1].to_owned(), weight));
    }
    Ok(out)
}
