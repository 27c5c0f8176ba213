use super::{KdTree, Planar, PoiRecord};

/// For each query point, indices into `pois` of every POI within `radius`
/// (inclusive), ordered by POI id.
pub fn radius_join<P: Planar>(points: &[P], pois: &[PoiRecord], radius: f64) -> Vec<Vec<usize>> {
    let tree = KdTree::from_points(pois.iter().map(Planar::xy));
    points
        .iter()
        .map(|p| {
            let mut hits = tree.within_radius(p.xy(), radius);
            hits.sort_by(|&a, &b| pois[a].id.cmp(&pois[b].id).then(a.cmp(&b)));
            hits
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSubset {
    /// Indices of the retained points, ascending.
    pub indices: Vec<usize>,
    pub total: usize,
}

impl ActiveSubset {
    pub fn count(&self) -> usize {
        self.indices.len()
    }

    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count() as f64 / self.total as f64
        }
    }
}

/// Keeps the points with at least one POI in their join list.
pub fn filter_active(poi_lists: &[Vec<usize>]) -> ActiveSubset {
    ActiveSubset {
        indices: poi_lists
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, _)| i)
            .collect(),
        total: poi_lists.len(),
    }
}
