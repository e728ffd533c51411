use super::SkeletonMask;
use crate::gridmap::OccupancyGrid;

/// Zhang-Suen thinning of the free space.
///
/// Each pass runs two parallel sub-iterations. With neighbors `P2..P9`
/// clockwise from north, `B` the number of set neighbors and `A` the number of
/// 0→1 transitions around the ring, a pixel is cleared when
/// `2 <= B <= 6`, `A == 1` and
/// * sub-iteration 1: `P2·P4·P6 == 0` and `P4·P6·P8 == 0`
/// * sub-iteration 2: `P2·P4·P8 == 0` and `P2·P6·P8 == 0`.
///
/// Passes repeat until neither sub-iteration clears anything. Pixels outside
/// the grid count as background.
pub fn zhang_suen(grid: &OccupancyGrid) -> SkeletonMask {
    let (w, h) = (grid.width(), grid.height());
    // one-pixel zero frame so neighbor reads never leave the buffer
    let pw = w + 2;
    let mut img = vec![0u8; pw * (h + 2)];
    for (x, y) in grid.free_cells() {
        img[(y + 1) * pw + x + 1] = 1;
    }

    let offsets: [isize; 8] = [
        -(pw as isize),     // P2 north
        -(pw as isize) + 1, // P3 north-east
        1,                  // P4 east
        pw as isize + 1,    // P5 south-east
        pw as isize,        // P6 south
        pw as isize - 1,    // P7 south-west
        -1,                 // P8 west
        -(pw as isize) - 1, // P9 north-west
    ];

    let mut candidates: Vec<usize> = (0..img.len()).filter(|&i| img[i] == 1).collect();
    let mut doomed = Vec::new();
    loop {
        let mut changed = false;
        for step in 0..2 {
            doomed.clear();
            for &i in &candidates {
                if img[i] == 0 {
                    continue;
                }
                let n: [u8; 8] = std::array::from_fn(|k| img[(i as isize + offsets[k]) as usize]);
                let b: u8 = n.iter().sum();
                if !(2..=6).contains(&b) {
                    continue;
                }
                let a = (0..8).filter(|&k| n[k] == 0 && n[(k + 1) % 8] == 1).count();
                if a != 1 {
                    continue;
                }
                let [p2, _, p4, _, p6, _, p8, _] = n;
                let clear = if step == 0 {
                    p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0
                } else {
                    p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0
                };
                if clear {
                    doomed.push(i);
                }
            }
            for &i in &doomed {
                img[i] = 0;
            }
            changed |= !doomed.is_empty();
        }
        if !changed {
            break;
        }
        candidates.retain(|&i| img[i] == 1);
    }

    let mut mask = SkeletonMask::empty(w, h);
    for y in 0..h {
        for x in 0..w {
            if img[(y + 1) * pw + x + 1] == 1 {
                mask.set(x, y, true);
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::{generate_dungeon, GenParams};

    /// Straight-from-the-rules thinning on nested vectors, kept deliberately
    /// naive: full rescans, named neighbors, explicit bounds checks.
    fn reference_thinning(grid: &OccupancyGrid) -> Vec<Vec<bool>> {
        let (w, h) = (grid.width() as i64, grid.height() as i64);
        let mut img: Vec<Vec<bool>> = (0..h)
            .map(|y| (0..w).map(|x| grid.is_free(x as usize, y as usize)).collect())
            .collect();
        let px = |img: &Vec<Vec<bool>>, x: i64, y: i64| -> u32 {
            if x < 0 || y < 0 || x >= w || y >= h {
                0
            } else {
                img[y as usize][x as usize] as u32
            }
        };
        loop {
            let mut any = false;
            for pass in [1, 2] {
                let snapshot = img.clone();
                let mut to_delete = vec![];
                for y in 0..h {
                    for x in 0..w {
                        if px(&snapshot, x, y) == 0 {
                            continue;
                        }
                        let p2 = px(&snapshot, x, y - 1);
                        let p3 = px(&snapshot, x + 1, y - 1);
                        let p4 = px(&snapshot, x + 1, y);
                        let p5 = px(&snapshot, x + 1, y + 1);
                        let p6 = px(&snapshot, x, y + 1);
                        let p7 = px(&snapshot, x - 1, y + 1);
                        let p8 = px(&snapshot, x - 1, y);
                        let p9 = px(&snapshot, x - 1, y - 1);
                        let ring = [p2, p3, p4, p5, p6, p7, p8, p9, p2];
                        let b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
                        let a = ring.windows(2).filter(|s| s[0] == 0 && s[1] == 1).count();
                        let ok = (2..=6).contains(&b) && a == 1;
                        let cond = if pass == 1 {
                            p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0
                        } else {
                            p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0
                        };
                        if ok && cond {
                            to_delete.push((x, y));
                        }
                    }
                }
                for (x, y) in &to_delete {
                    img[*y as usize][*x as usize] = false;
                }
                any |= !to_delete.is_empty();
            }
            if !any {
                return img;
            }
        }
    }

    #[test]
    fn matches_reference_on_generated_maps() {
        for seed in 0..20 {
            let g = generate_dungeon(&GenParams::default().with_seed(seed)).unwrap();
            let fast = zhang_suen(&g);
            let slow = reference_thinning(&g);
            for (y, row) in slow.iter().enumerate() {
                for (x, &on) in row.iter().enumerate() {
                    assert_eq!(fast.get(x, y), on, "seed {seed} at ({x}, {y})");
                }
            }
        }
    }

    #[test]
    fn thin_curve_unchanged() {
        // straight run, then a diagonal run: no redundant 4-connected corners
        let g = OccupancyGrid::from_ascii(
            "###########
             #######.###
             ######.####
             #.....#####
             ###########",
        )
        .unwrap();
        let m = zhang_suen(&g);
        let expected: Vec<(usize, usize)> = g.free_cells().collect();
        assert_eq!(m.pixels().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn idempotent_and_thin() {
        for seed in 0..10 {
            let g = generate_dungeon(&GenParams::default().with_seed(seed)).unwrap();
            let once = zhang_suen(&g);
            let as_grid = OccupancyGrid::from_fn(g.width(), g.height(), |x, y| once.get(x, y)).unwrap();
            assert_eq!(zhang_suen(&as_grid), once);
            assert_eq!(once.component_count(), 1);
            once.check_free(&g).unwrap();
        }
    }
}
