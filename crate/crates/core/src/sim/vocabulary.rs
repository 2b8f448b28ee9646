//! Built-in 40-word elementary vocabulary grouped into themed clusters.

use crate::ids::{AssetId, WordId};
use crate::wordweb::{MediaAsset, MediaKind, Relation, RelationKind, Tier, WordNode, WordWeb};

pub const CLUSTERS: [[&str; 5]; 8] = [
    ["habitat", "deciduous", "evergreen", "hibernate", "migrate"],
    ["measure", "addition", "subtraction", "dozen", "half"],
    ["symmetry", "octagon", "hexagon", "identical", "parallel"],
    [
        "career",
        "veterinarian",
        "architect",
        "sculpture",
        "champion",
    ],
    ["observe", "insect", "larva", "binoculars", "microscope"],
    ["emotion", "conflict", "cooperate", "generous", "curious"],
    ["performance", "pirouette", "rhythm", "melody", "orchestra"],
    ["construct", "repair", "fragile", "sturdy", "inspect"],
];

fn id(lemma: &str) -> WordId {
    WordId::new(lemma)
}

/// A connected web over the first `n` vocabulary words. Beyond the built-in
/// list, generic `extra-NNN` words are appended to the clusters round-robin.
pub fn synthetic_web(n: usize) -> WordWeb {
    let builtin: Vec<&str> = CLUSTERS.iter().flatten().copied().collect();
    let lemmas: Vec<String> = (0..n)
        .map(|i| match builtin.get(i) {
            Some(w) => (*w).to_string(),
            None => format!("extra-{:03}", i + 1),
        })
        .collect();

    let mut web = WordWeb::new();
    for lemma in &lemmas {
        let image = AssetId::new(format!("img-{lemma}"));
        let video = AssetId::new(format!("vid-{lemma}"));
        web.add_media(MediaAsset {
            asset_id: image.clone(),
            kind: MediaKind::Image,
            uri: format!("media/{lemma}.png"),
            age_appropriate: true,
        })
        .expect("fresh asset");
        web.add_media(MediaAsset {
            asset_id: video.clone(),
            kind: MediaKind::Video,
            uri: format!("media/{lemma}.mp4"),
            age_appropriate: true,
        })
        .expect("fresh asset");
        let mut node = WordNode::new(id(lemma), lemma.clone());
        node.tier = Tier::Tier2;
        node.image_ids = vec![image];
        node.video_ids = vec![video];
        web.add_word(node).expect("fresh word");
    }

    // Cluster membership by position: word i belongs to cluster i % 8 after
    // the built-in list, otherwise to its own row.
    let cluster_of = |i: usize| {
        if i < builtin.len() {
            i / 5
        } else {
            i % CLUSTERS.len()
        }
    };
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); CLUSTERS.len()];
    for i in 0..n {
        members[cluster_of(i)].push(i);
    }
    let mut link = |a: usize, b: usize, kind: RelationKind, weight: f64| {
        web.add_relation(Relation {
            from_word_id: id(&lemmas[a]),
            to_word_id: id(&lemmas[b]),
            kind,
            weight,
        })
        .expect("valid relation");
    };
    for group in members.iter().filter(|g| !g.is_empty()) {
        let hub = group[0];
        for &w in &group[1..] {
            link(hub, w, RelationKind::Category, 0.5);
        }
        for pair in group[1..].windows(2) {
            link(pair[0], pair[1], RelationKind::Related, 1.0);
        }
    }
    let hubs: Vec<usize> = members.iter().filter_map(|g| g.first().copied()).collect();
    for pair in hubs.windows(2) {
        link(pair[0], pair[1], RelationKind::Related, 0.3);
    }
    web
}
