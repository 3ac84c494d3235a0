//! Maximum bipartite matching by augmenting paths, and the minimum vertex
//! cover it induces.

/// A maximum matching together with a minimum vertex cover of the same size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingCover {
    /// Indices into the edge list, sorted by left endpoint.
    pub matching: Vec<usize>,
    pub cover_left: Vec<usize>,
    pub cover_right: Vec<usize>,
}

impl MatchingCover {
    pub fn size(&self) -> usize {
        self.matching.len()
    }

    pub fn cover_size(&self) -> usize {
        self.cover_left.len() + self.cover_right.len()
    }
}

/// Edges are `(left, right)` pairs; duplicates are harmless.
pub fn matching_and_cover(n_left: usize, n_right: usize, edges: &[(usize, usize)]) -> MatchingCover {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_left];
    for (e, &(l, r)) in edges.iter().enumerate() {
        adj[l].push((r, e));
    }
    let mut match_right: Vec<Option<(usize, usize)>> = vec![None; n_right];

    fn augment(
        l: usize,
        adj: &[Vec<(usize, usize)>],
        seen: &mut [bool],
        match_right: &mut [Option<(usize, usize)>],
    ) -> bool {
        for &(r, e) in &adj[l] {
            if seen[r] {
                continue;
            }
            seen[r] = true;
            let free = match match_right[r] {
                None => true,
                Some((l2, _)) => augment(l2, adj, seen, match_right),
            };
            if free {
                match_right[r] = Some((l, e));
                return true;
            }
        }
        false
    }

    for l in 0..n_left {
        let mut seen = vec![false; n_right];
        augment(l, &adj, &mut seen, &mut match_right);
    }

    let mut match_left: Vec<Option<usize>> = vec![None; n_left];
    for (r, m) in match_right.iter().enumerate() {
        if let Some((l, _)) = m {
            match_left[*l] = Some(r);
        }
    }

    // König: Z = vertices reachable from unmatched left vertices along
    // alternating paths; the cover is (L \ Z) ∪ (R ∩ Z).
    let mut z_left = vec![false; n_left];
    let mut z_right = vec![false; n_right];
    let mut stack: Vec<usize> = (0..n_left).filter(|&l| match_left[l].is_none()).collect();
    for &l in &stack {
        z_left[l] = true;
    }
    while let Some(l) = stack.pop() {
        for &(r, _) in &adj[l] {
            if z_right[r] || match_left[l] == Some(r) {
                continue;
            }
            z_right[r] = true;
            if let Some((l2, _)) = match_right[r] {
                if !z_left[l2] {
                    z_left[l2] = true;
                    stack.push(l2);
                }
            }
        }
    }

    let mut matching: Vec<(usize, usize)> = match_right.iter().flatten().copied().collect();
    matching.sort();
    MatchingCover {
        matching: matching.into_iter().map(|(_, e)| e).collect(),
        cover_left: (0..n_left).filter(|&l| !z_left[l]).collect(),
        cover_right: (0..n_right).filter(|&r| z_right[r]).collect(),
    }
}

/// Smallest number of rows plus columns covering all edges, by brute force
/// over row subsets. Meant for cross-checking on small inputs.
pub fn brute_force_cover(n_left: usize, edges: &[(usize, usize)]) -> usize {
    assert!(n_left < 20, "brute force cover is exponential in the number of rows");
    let mut best = usize::MAX;
    for mask in 0u32..(1 << n_left) {
        let mut cols: Vec<usize> = edges
            .iter()
            .filter(|(l, _)| mask & (1 << l) == 0)
            .map(|&(_, r)| r)
            .collect();
        cols.sort();
        cols.dedup();
        best = best.min(mask.count_ones() as usize + cols.len());
    }
    best
}
