//! Query-conditioned knowledge graph, citation impact and dashboard tables.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusSnapshot, UNKNOWN_YEAR};
use crate::retrieval::RankedList;
use crate::topics::{Keyword, TopicAssignment, TopicSummary, OUTLIER};

pub const UNKNOWN_YEAR_KEY: &str = "unknown";
pub const TOP_PAPERS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("assignment refers to paper {0} outside the retrieved set")]
    UnknownPaper(String),
    #[error("assignment refers to topic {0} without a summary")]
    UnknownTopic(i64),
    #[error("node {0:?} is not a paper")]
    NotAPaper(NodeRef),
    #[error("impact is undefined for node {0:?}")]
    UnsupportedKind(NodeRef),
    #[error("node {0:?} is not in the graph")]
    MissingNode(NodeRef),
    #[error("edge {0:?} does not match its label's signature")]
    BadSignature(EdgeLabel),
    #[error("duplicate node {0:?}")]
    DuplicateNode(NodeRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Paper,
    Author,
    Institution,
    Country,
    Topic,
    Year,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeRef {
    pub kind: NodeKind,
    pub key: String,
}

impl NodeRef {
    pub fn new(kind: NodeKind, key: impl Into<String>) -> Self {
        NodeRef { kind, key: key.into() }
    }

    pub fn paper(key: impl Into<String>) -> Self {
        NodeRef::new(NodeKind::Paper, key)
    }

    pub fn year(year: i32) -> Self {
        if year == UNKNOWN_YEAR {
            NodeRef::new(NodeKind::Year, UNKNOWN_YEAR_KEY)
        } else {
            NodeRef::new(NodeKind::Year, year.to_string())
        }
    }

    pub fn topic(id: i64) -> Self {
        NodeRef::new(NodeKind::Topic, id.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeLabel {
    Authorship,
    AffiliatedWith,
    LocatedIn,
    PublishedIn,
    HasTopic,
    Cites,
}

impl EdgeLabel {
    pub const ALL: [EdgeLabel; 6] = [
        EdgeLabel::Authorship,
        EdgeLabel::AffiliatedWith,
        EdgeLabel::LocatedIn,
        EdgeLabel::PublishedIn,
        EdgeLabel::HasTopic,
        EdgeLabel::Cites,
    ];

    /// `(from, to)` node kinds.
    pub fn signature(self) -> (NodeKind, NodeKind) {
        match self {
            EdgeLabel::Authorship => (NodeKind::Author, NodeKind::Paper),
            EdgeLabel::AffiliatedWith => (NodeKind::Paper, NodeKind::Institution),
            EdgeLabel::LocatedIn => (NodeKind::Paper, NodeKind::Country),
            EdgeLabel::PublishedIn => (NodeKind::Paper, NodeKind::Year),
            EdgeLabel::HasTopic => (NodeKind::Paper, NodeKind::Topic),
            EdgeLabel::Cites => (NodeKind::Paper, NodeKind::Paper),
        }
    }
}

/// Attributes of any node kind; fields not meaningful for a kind are absent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeAttrs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publication_year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citation_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_id: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keywords: Option<Vec<Keyword>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub document_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impact: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub from: NodeRef,
    pub to: NodeRef,
    pub label: EdgeLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub query_hash: String,
    pub snapshot_hash: String,
    /// Seconds since the Unix epoch.
    pub built_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub kind: NodeKind,
    pub key: String,
    pub attrs: NodeAttrs,
}

/// Serialized node-link form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLinkDocument {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphManifest {
    pub node_count: usize,
    pub edge_count: usize,
    pub nodes_by_kind: BTreeMap<NodeKind, usize>,
    pub edges_by_label: BTreeMap<EdgeLabel, usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<NodeRef, NodeAttrs>,
    edges: Vec<GraphEdge>,
    provenance: Provenance,
}

fn indegrees(edges: &[GraphEdge]) -> BTreeMap<&str, usize> {
    let mut indegree = BTreeMap::new();
    for e in edges {
        if e.label == EdgeLabel::Cites {
            *indegree.entry(e.to.key.as_str()).or_insert(0) += 1;
        }
    }
    indegree
}

/// Distinct papers reached from each author, institution and country.
fn entity_papers(edges: &[GraphEdge]) -> BTreeMap<NodeRef, BTreeSet<&str>> {
    let mut out: BTreeMap<NodeRef, BTreeSet<&str>> = BTreeMap::new();
    for e in edges {
        match e.label {
            EdgeLabel::Authorship => {
                out.entry(e.from.clone()).or_default().insert(e.to.key.as_str());
            }
            EdgeLabel::AffiliatedWith | EdgeLabel::LocatedIn => {
                out.entry(e.to.clone()).or_default().insert(e.from.key.as_str());
            }
            _ => {}
        }
    }
    out
}

fn edge_order(a: &GraphEdge, b: &GraphEdge) -> core::cmp::Ordering {
    (&a.from, &a.to, a.label).cmp(&(&b.from, &b.to, b.label))
}

impl KnowledgeGraph {
    /// Builds the graph of the retrieved set `retrieved`: its papers, their
    /// authors, institutions, countries, years and topics. Only citations
    /// between two retrieved papers become edges.
    pub fn build(
        retrieved: &RankedList,
        assignments: &[TopicAssignment],
        summaries: &[TopicSummary],
        snapshot: &CorpusSnapshot,
        provenance: Provenance,
    ) -> Result<Self, GraphError> {
        let in_set: BTreeSet<&str> = retrieved
            .entries
            .iter()
            .map(|e| e.paper_id.as_str())
            .filter(|id| snapshot.get_paper(id).is_some())
            .collect();
        let mut nodes: BTreeMap<NodeRef, NodeAttrs> = BTreeMap::new();
        let mut edges: BTreeSet<(NodeRef, NodeRef, EdgeLabel)> = BTreeSet::new();
        let mut weights: BTreeMap<(NodeRef, NodeRef, EdgeLabel), f64> = BTreeMap::new();

        let summary_ids: BTreeSet<i64> = summaries.iter().map(|s| s.topic_id).collect();
        let mut by_paper: BTreeMap<&str, &TopicAssignment> = BTreeMap::new();
        for a in assignments {
            if !in_set.contains(a.paper_id.as_str()) {
                return Err(GraphError::UnknownPaper(a.paper_id.clone()));
            }
            if !summary_ids.contains(&a.topic_id) {
                return Err(GraphError::UnknownTopic(a.topic_id));
            }
            by_paper.insert(a.paper_id.as_str(), a);
        }
        for s in summaries {
            nodes.insert(
                NodeRef::topic(s.topic_id),
                NodeAttrs { topic_id: Some(s.topic_id), keywords: Some(s.keywords.clone()), ..NodeAttrs::default() },
            );
        }

        for &pid in &in_set {
            let paper = snapshot.get_paper(pid).expect("filtered above");
            let pref = NodeRef::paper(pid);
            let assignment = by_paper.get(pid);
            nodes.insert(
                pref.clone(),
                NodeAttrs {
                    title: Some(paper.title.clone()),
                    publication_year: Some(paper.publication_year),
                    topic_id: assignment.map(|a| a.topic_id),
                    topic_probability: assignment.map(|a| a.probability),
                    ..NodeAttrs::default()
                },
            );
            for aid in snapshot.paper_authors(pid) {
                let aref = NodeRef::new(NodeKind::Author, aid.clone());
                let name = snapshot.get_author(aid).map(|a| a.name.clone());
                nodes.entry(aref.clone()).or_insert_with(|| NodeAttrs { name, ..NodeAttrs::default() });
                edges.insert((aref, pref.clone(), EdgeLabel::Authorship));
            }
            for inst in snapshot.paper_institutions(pid) {
                let iref = NodeRef::new(NodeKind::Institution, inst);
                nodes.entry(iref.clone()).or_default();
                edges.insert((pref.clone(), iref, EdgeLabel::AffiliatedWith));
            }
            for country in snapshot.paper_countries(pid) {
                let cref = NodeRef::new(NodeKind::Country, country);
                nodes.entry(cref.clone()).or_default();
                edges.insert((pref.clone(), cref, EdgeLabel::LocatedIn));
            }
            let yref = NodeRef::year(paper.publication_year);
            nodes.entry(yref.clone()).or_insert_with(|| NodeAttrs {
                publication_year: Some(paper.publication_year),
                ..NodeAttrs::default()
            });
            edges.insert((pref.clone(), yref, EdgeLabel::PublishedIn));
            if let Some(a) = assignment {
                let key = (pref.clone(), NodeRef::topic(a.topic_id), EdgeLabel::HasTopic);
                weights.insert(key.clone(), a.probability);
                edges.insert(key);
            }
        }
        for c in snapshot.citations() {
            if in_set.contains(c.citing_paper_id.as_str()) && in_set.contains(c.cited_paper_id.as_str()) {
                edges.insert((NodeRef::paper(&c.citing_paper_id), NodeRef::paper(&c.cited_paper_id), EdgeLabel::Cites));
            }
        }

        let edges: Vec<GraphEdge> = edges
            .into_iter()
            .map(|key| {
                let weight = weights.get(&key).copied();
                GraphEdge { from: key.0, to: key.1, label: key.2, weight }
            })
            .collect();
        let mut graph = KnowledgeGraph { nodes, edges, provenance };
        graph.refresh_derived();
        Ok(graph)
    }

    /// Recomputes citation counts, topic document counts and entity impact
    /// from the edges.
    fn refresh_derived(&mut self) {
        let indegree = indegrees(&self.edges);
        let mut topic_docs: BTreeMap<NodeRef, usize> = BTreeMap::new();
        for e in &self.edges {
            if e.label == EdgeLabel::HasTopic {
                *topic_docs.entry(e.to.clone()).or_insert(0) += 1;
            }
        }
        let linked = entity_papers(&self.edges);
        for (node, attrs) in self.nodes.iter_mut() {
            match node.kind {
                NodeKind::Paper => attrs.citation_count = Some(indegree.get(node.key.as_str()).copied().unwrap_or(0)),
                NodeKind::Topic => attrs.document_count = Some(topic_docs.get(node).copied().unwrap_or(0)),
                NodeKind::Author | NodeKind::Institution | NodeKind::Country => {
                    let papers = linked.get(node);
                    attrs.impact =
                        Some(papers.map_or(0, |ps| ps.iter().map(|p| indegree.get(*p).copied().unwrap_or(0)).sum()));
                }
                NodeKind::Year => {}
            }
        }
    }

    fn indegrees(&self) -> BTreeMap<&str, usize> {
        indegrees(&self.edges)
    }

    fn entity_papers(&self) -> BTreeMap<NodeRef, BTreeSet<&str>> {
        entity_papers(&self.edges)
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&NodeRef, &NodeAttrs)> {
        self.nodes.iter()
    }

    pub fn node(&self, node: &NodeRef) -> Option<&NodeAttrs> {
        self.nodes.get(node)
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn manifest(&self) -> GraphManifest {
        let mut m = GraphManifest { node_count: self.nodes.len(), edge_count: self.edges.len(), ..Default::default() };
        for n in self.nodes.keys() {
            *m.nodes_by_kind.entry(n.kind).or_insert(0) += 1;
        }
        for e in &self.edges {
            *m.edges_by_label.entry(e.label).or_insert(0) += 1;
        }
        m
    }

    /// Number of citation edges ending at a paper node.
    pub fn paper_impact(&self, node: &NodeRef) -> Result<usize, GraphError> {
        if node.kind != NodeKind::Paper {
            return Err(GraphError::NotAPaper(node.clone()));
        }
        if !self.nodes.contains_key(node) {
            return Err(GraphError::MissingNode(node.clone()));
        }
        Ok(self.edges.iter().filter(|e| e.label == EdgeLabel::Cites && &e.to == node).count())
    }

    /// Sum of paper impact over the distinct papers linked to an author,
    /// institution or country.
    pub fn entity_impact(&self, node: &NodeRef) -> Result<usize, GraphError> {
        let label = match node.kind {
            NodeKind::Author => EdgeLabel::Authorship,
            NodeKind::Institution => EdgeLabel::AffiliatedWith,
            NodeKind::Country => EdgeLabel::LocatedIn,
            _ => return Err(GraphError::UnsupportedKind(node.clone())),
        };
        if !self.nodes.contains_key(node) {
            return Err(GraphError::MissingNode(node.clone()));
        }
        let papers: BTreeSet<&NodeRef> = self
            .edges
            .iter()
            .filter(|e| e.label == label)
            .filter_map(|e| match label {
                EdgeLabel::Authorship if &e.from == node => Some(&e.to),
                EdgeLabel::AffiliatedWith | EdgeLabel::LocatedIn if &e.to == node => Some(&e.from),
                _ => None,
            })
            .collect();
        papers.into_iter().map(|p| self.paper_impact(p)).sum()
    }

    pub fn to_node_link(&self) -> NodeLinkDocument {
        NodeLinkDocument {
            nodes: self
                .nodes
                .iter()
                .map(|(r, a)| GraphNode { kind: r.kind, key: r.key.clone(), attrs: a.clone() })
                .collect(),
            edges: self.edges.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Rebuilds a graph from its node-link form, checking endpoints and
    /// edge signatures.
    pub fn from_node_link(doc: NodeLinkDocument) -> Result<Self, GraphError> {
        let mut nodes = BTreeMap::new();
        for n in doc.nodes {
            let r = NodeRef { kind: n.kind, key: n.key };
            if nodes.insert(r.clone(), n.attrs).is_some() {
                return Err(GraphError::DuplicateNode(r));
            }
        }
        for e in &doc.edges {
            for end in [&e.from, &e.to] {
                if !nodes.contains_key(end) {
                    return Err(GraphError::MissingNode(end.clone()));
                }
            }
            if (e.from.kind, e.to.kind) != e.label.signature() {
                return Err(GraphError::BadSignature(e.label));
            }
        }
        let mut edges = doc.edges;
        edges.sort_by(edge_order);
        Ok(KnowledgeGraph { nodes, edges, provenance: doc.provenance })
    }

    pub fn analytics(&self) -> AnalyticsBundle {
        compute_analytics(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicCount {
    pub topic_id: i64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearTopicCount {
    /// 0 when the year is unknown.
    pub year: i32,
    pub topic_id: i64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityImpact {
    pub key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub impact: usize,
    pub paper_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperImpact {
    pub paper_id: String,
    pub title: String,
    pub publication_year: i32,
    pub citation_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_id: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnalyticsBundle {
    pub topic_distribution: Vec<TopicCount>,
    pub yearly_topic_counts: Vec<YearTopicCount>,
    pub country_impact: Vec<EntityImpact>,
    pub institution_impact: Vec<EntityImpact>,
    pub author_impact: Vec<EntityImpact>,
    pub top_papers: Vec<PaperImpact>,
}

/// Dashboard tables derived from graph edges and attributes alone.
pub fn compute_analytics(graph: &KnowledgeGraph) -> AnalyticsBundle {
    let mut topic_of: BTreeMap<&str, i64> = BTreeMap::new();
    let mut year_of: BTreeMap<&str, i32> = BTreeMap::new();
    for e in &graph.edges {
        match e.label {
            EdgeLabel::HasTopic => {
                topic_of.insert(e.from.key.as_str(), e.to.key.parse().unwrap_or(OUTLIER));
            }
            EdgeLabel::PublishedIn => {
                year_of.insert(e.from.key.as_str(), e.to.key.parse().unwrap_or(UNKNOWN_YEAR));
            }
            _ => {}
        }
    }
    let indegree = graph.indegrees();
    let mut distribution: BTreeMap<i64, usize> = BTreeMap::new();
    let mut yearly: BTreeMap<(i32, i64), usize> = BTreeMap::new();
    let mut papers = Vec::new();
    for (node, attrs) in &graph.nodes {
        if node.kind != NodeKind::Paper {
            continue;
        }
        let pid = node.key.as_str();
        let topic = topic_of.get(pid).copied().unwrap_or(OUTLIER);
        *distribution.entry(topic).or_insert(0) += 1;
        let year = year_of.get(pid).copied().unwrap_or(UNKNOWN_YEAR);
        *yearly.entry((year, topic)).or_insert(0) += 1;
        papers.push(PaperImpact {
            paper_id: node.key.clone(),
            title: attrs.title.clone().unwrap_or_default(),
            publication_year: year,
            citation_count: indegree.get(pid).copied().unwrap_or(0),
            topic_id: topic_of.get(pid).copied(),
        });
    }
    papers.sort_by(|a, b| b.citation_count.cmp(&a.citation_count).then_with(|| a.paper_id.cmp(&b.paper_id)));
    papers.truncate(TOP_PAPERS);

    let linked = graph.entity_papers();
    let impact_table = |kind: NodeKind| {
        let mut rows: Vec<EntityImpact> = graph
            .nodes
            .iter()
            .filter(|(n, _)| n.kind == kind)
            .map(|(n, attrs)| {
                let ps = linked.get(n);
                EntityImpact {
                    key: n.key.clone(),
                    name: attrs.name.clone(),
                    impact: ps.map_or(0, |ps| ps.iter().map(|p| indegree.get(*p).copied().unwrap_or(0)).sum()),
                    paper_count: ps.map_or(0, BTreeSet::len),
                }
            })
            .collect();
        rows.sort_by(|a, b| b.impact.cmp(&a.impact).then_with(|| a.key.cmp(&b.key)));
        rows
    };

    AnalyticsBundle {
        topic_distribution: distribution.into_iter().map(|(topic_id, count)| TopicCount { topic_id, count }).collect(),
        yearly_topic_counts: yearly
            .into_iter()
            .map(|((year, topic_id), count)| YearTopicCount { year, topic_id, count })
            .collect(),
        country_impact: impact_table(NodeKind::Country),
        institution_impact: impact_table(NodeKind::Institution),
        author_impact: impact_table(NodeKind::Author),
        top_papers: papers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AuthorRecord, AuthorshipRecord, CitationRecord, CorpusInput, PaperInput, ValidationPolicy};
    use crate::retrieval::RankingSource;
    use alloc::vec;

    fn paper(id: &str, year: i32) -> PaperInput {
        PaperInput {
            paper_id: id.into(),
            title: alloc::format!("Title {id}"),
            abstract_text: String::from("text"),
            publication_year: (year != UNKNOWN_YEAR).then_some(year as i64),
            ..PaperInput::default()
        }
    }

    fn snapshot(papers: &[(&str, i32)], cites: &[(&str, &str)]) -> CorpusSnapshot {
        let input = CorpusInput {
            papers: papers.iter().map(|(p, y)| paper(p, *y)).collect(),
            authors: vec![AuthorRecord {
                author_id: "a1".into(),
                name: "Ada Lovelace".into(),
                institution_ids: vec!["i1".into()],
                country_codes: vec!["GB".into()],
            }],
            authorship: papers
                .iter()
                .map(|(p, _)| AuthorshipRecord { author_id: "a1".into(), paper_id: (*p).into() })
                .collect(),
            citations: cites
                .iter()
                .map(|(a, b)| CitationRecord { citing_paper_id: (*a).into(), cited_paper_id: (*b).into() })
                .collect(),
            ..CorpusInput::default()
        };
        CorpusSnapshot::assemble(input, ValidationPolicy::Drop).unwrap().0
    }

    fn retrieved(ids: &[&str]) -> RankedList {
        RankedList::from_scored(ids.iter().map(|i| (String::from(*i), 1.0)), RankingSource::Fused)
    }

    fn one_topic(ids: &[&str]) -> (Vec<TopicAssignment>, Vec<TopicSummary>) {
        let a = ids
            .iter()
            .map(|i| TopicAssignment { paper_id: (*i).into(), topic_id: 0, probability: 1.0, distribution: vec![] })
            .collect();
        (a, vec![TopicSummary { topic_id: 0, keywords: vec![], document_count: ids.len() }])
    }

    #[test]
    fn single_paper_enumerates_each_label_once() {
        let snap = snapshot(&[("p1", 2020)], &[]);
        let (a, s) = one_topic(&["p1"]);
        let g = KnowledgeGraph::build(&retrieved(&["p1"]), &a, &s, &snap, Provenance::default()).unwrap();
        assert_eq!(g.node_count(), 6);
        assert_eq!(g.edge_count(), 5);
        let labels: BTreeSet<EdgeLabel> = g.edges().iter().map(|e| e.label).collect();
        assert_eq!(labels.len(), 5);
        assert!(!labels.contains(&EdgeLabel::Cites));
        for e in g.edges() {
            assert_eq!((e.from.kind, e.to.kind), e.label.signature());
        }
    }

    #[test]
    fn only_intra_set_citations_become_edges() {
        let snap = snapshot(&[("p1", 2020), ("p2", 2020), ("p3", 2020)], &[("p1", "p2"), ("p2", "p3")]);
        let (a, s) = one_topic(&["p1", "p2"]);
        let g = KnowledgeGraph::build(&retrieved(&["p1", "p2"]), &a, &s, &snap, Provenance::default()).unwrap();
        let cites: Vec<_> = g.edges().iter().filter(|e| e.label == EdgeLabel::Cites).collect();
        assert_eq!(cites.len(), 1);
        assert_eq!(g.paper_impact(&NodeRef::paper("p2")).unwrap(), 1);
        assert_eq!(g.paper_impact(&NodeRef::paper("p1")).unwrap(), 0);
    }

    #[test]
    fn author_impact_sums_paper_indegrees() {
        let snap = snapshot(
            &[("p1", 2019), ("p2", 2019), ("c1", 2020), ("c2", 2020), ("c3", 2020)],
            &[("c1", "p1"), ("c2", "p1"), ("c1", "p2"), ("c2", "p2"), ("c3", "p2")],
        );
        let ids = ["p1", "p2", "c1", "c2", "c3"];
        let (a, s) = one_topic(&ids);
        let g = KnowledgeGraph::build(&retrieved(&ids), &a, &s, &snap, Provenance::default()).unwrap();
        assert_eq!(g.entity_impact(&NodeRef::new(NodeKind::Author, "a1")).unwrap(), 5);
        assert_eq!(g.entity_impact(&NodeRef::new(NodeKind::Country, "GB")).unwrap(), 5);
        assert!(matches!(g.entity_impact(&NodeRef::year(2019)), Err(GraphError::UnsupportedKind(_))));
        assert!(matches!(g.paper_impact(&NodeRef::year(2019)), Err(GraphError::NotAPaper(_))));
        let analytics = g.analytics();
        assert_eq!(analytics.author_impact[0].impact, 5);
        assert_eq!(analytics.top_papers[0].paper_id, "p2");
        assert_eq!(
            analytics.yearly_topic_counts,
            vec![
                YearTopicCount { year: 2019, topic_id: 0, count: 2 },
                YearTopicCount { year: 2020, topic_id: 0, count: 3 }
            ]
        );
    }

    #[test]
    fn assignment_outside_retrieved_set_is_rejected() {
        let snap = snapshot(&[("p1", 2020), ("p2", 2020)], &[]);
        let (a, s) = one_topic(&["p2"]);
        let err = KnowledgeGraph::build(&retrieved(&["p1"]), &a, &s, &snap, Provenance::default()).unwrap_err();
        assert_eq!(err, GraphError::UnknownPaper("p2".into()));
    }

    #[test]
    fn node_link_round_trip() {
        let snap = snapshot(&[("p1", 2020), ("p2", UNKNOWN_YEAR)], &[("p1", "p2")]);
        let (a, s) = one_topic(&["p1", "p2"]);
        let g = KnowledgeGraph::build(&retrieved(&["p1", "p2"]), &a, &s, &snap, Provenance::default()).unwrap();
        assert!(g.node(&NodeRef::new(NodeKind::Year, UNKNOWN_YEAR_KEY)).is_some());
        let doc = g.to_node_link();
        let back = KnowledgeGraph::from_node_link(doc.clone()).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_node_link(), doc);
    }

    #[test]
    fn empty_graph_has_empty_tables() {
        let g = KnowledgeGraph::default();
        assert_eq!(g.analytics(), AnalyticsBundle::default());
    }
}
