//! Randomized invariants over the small building blocks: glob matching,
//! polygon canonicalization, point-segment distance, coordinate text
//! round-trips, control-point CSV parsing and deduplication.

use proptest::prelude::*;

use cad2gis::cad_clean::dedupe_entities;
use cad2gis::geom::{point_segment_distance, ring_signed_area};
use cad2gis::georef::read_control_points;
use cad2gis::profile::glob_match;
use cad2gis::{CadDocument, CadEntity, EntityGeometry, Geometry, Handle, Point2};

/// Coarse grid coordinate so independently drawn entities collide often.
fn coarse() -> impl Strategy<Value = f64> {
    (-8i32..=8).prop_map(|n| n as f64 * 0.25)
}

fn entity_geometry() -> impl Strategy<Value = EntityGeometry> {
    prop_oneof![
        (coarse(), coarse(), coarse(), coarse()).prop_map(|(ax, ay, bx, by)| {
            EntityGeometry::Line {
                start: Point2::new(ax, ay),
                end: Point2::new(bx, by),
            }
        }),
        (coarse(), coarse(), 1u8..=8).prop_map(|(x, y, r)| EntityGeometry::Circle {
            center: Point2::new(x, y),
            radius: r as f64 * 0.25,
        }),
        (coarse(), coarse(), "[A-Z0-9]{1,4}").prop_map(|(x, y, content)| {
            EntityGeometry::Text {
                insert: Point2::new(x, y),
                content,
            }
        }),
    ]
}

fn document() -> impl Strategy<Value = CadDocument> {
    proptest::collection::vec(("(PIPE|MAIN|NOTE)", entity_geometry()), 0..30).prop_map(|list| {
        let entities = list
            .into_iter()
            .enumerate()
            .map(|(i, (layer, geometry))| CadEntity::new(Handle(i as u64 + 1), layer, geometry))
            .collect();
        CadDocument {
            entities,
            source_name: "prop.dxf".into(),
            z_discarded: 0,
        }
    })
}

proptest! {
    /// A wildcard-free pattern matches exactly itself.
    #[test]
    fn literal_glob_is_string_equality(
        pattern in "[A-Za-z0-9_$-]{0,10}",
        other in "[A-Za-z0-9_$-]{0,10}",
    ) {
        prop_assert!(glob_match(&pattern, &pattern));
        prop_assert_eq!(glob_match(&pattern, &other), pattern == other);
    }

    /// Leading/trailing stars mean suffix/prefix match; a bare star matches
    /// anything.
    #[test]
    fn star_globs_are_prefix_and_suffix_tests(
        stem in "[A-Z]{0,6}",
        text in "[A-Z]{0,12}",
    ) {
        prop_assert!(glob_match("*", &text));
        prop_assert_eq!(glob_match(&format!("{stem}*"), &text), text.starts_with(&stem));
        prop_assert_eq!(glob_match(&format!("*{stem}"), &text), text.ends_with(&stem));
    }

    /// `?` consumes exactly one character.
    #[test]
    fn question_marks_match_by_length(text in "[a-z]{0,12}", extra in 1usize..4) {
        prop_assert!(glob_match(&"?".repeat(text.chars().count()), &text));
        prop_assert!(!glob_match(&"?".repeat(text.chars().count() + extra), &text));
    }

    /// Polygon construction always yields a clockwise ring, and winding of
    /// the input ring does not matter.
    #[test]
    fn polygons_are_canonically_clockwise(
        cx in -100.0f64..100.0,
        cy in -100.0f64..100.0,
        radii in proptest::collection::vec(0.5f64..10.0, 3..8),
        turn in 0.0f64..std::f64::consts::TAU,
    ) {
        // Star-shaped ring around the center: simple by construction.
        let n = radii.len();
        let mut ring: Vec<Point2> = radii
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let a = turn + std::f64::consts::TAU * k as f64 / n as f64;
                Point2::new(cx + r * a.cos(), cy + r * a.sin())
            })
            .collect();
        ring.push(ring[0]);
        let forward = Geometry::polygon(ring.clone()).unwrap();
        let Geometry::Polygon(out) = &forward else { unreachable!() };
        prop_assert!(ring_signed_area(out) <= 0.0, "ring is clockwise");
        ring.reverse();
        prop_assert_eq!(Geometry::polygon(ring).unwrap(), forward);
    }

    /// Distance to a segment never exceeds the distance to either endpoint,
    /// is zero at the endpoints, and ignores segment direction.
    #[test]
    fn segment_distance_is_bounded_and_symmetric(
        px in -100.0f64..100.0, py in -100.0f64..100.0,
        ax in -100.0f64..100.0, ay in -100.0f64..100.0,
        bx in -100.0f64..100.0, by in -100.0f64..100.0,
    ) {
        let (p, a, b) = (Point2::new(px, py), Point2::new(ax, ay), Point2::new(bx, by));
        let d = point_segment_distance(&p, &a, &b);
        prop_assert!(d <= p.distance(&a) + 1e-12 && d <= p.distance(&b) + 1e-12);
        // Exact at the segment's own endpoints, bit for bit.
        prop_assert_eq!(point_segment_distance(&a, &a, &b), 0.0);
        prop_assert_eq!(point_segment_distance(&b, &a, &b), 0.0);
        prop_assert!((d - point_segment_distance(&p, &b, &a)).abs() <= 1e-9);
    }

    /// Any multiple of 2^-9 survives the 9-fractional-digit coordinate text
    /// format bit for bit. Output exactness for grid-aligned drawings reduces
    /// to this.
    #[test]
    fn nine_digit_text_preserves_binary_grid_values(m in -(1i64 << 30)..(1i64 << 30)) {
        let v = m as f64 / 512.0;
        let text = format!("{v:.9}");
        prop_assert_eq!(text.parse::<f64>().unwrap().to_bits(), v.to_bits());
    }

    /// Control-point CSV holds full doubles: shortest-form decimal text
    /// parses back to the same bits.
    #[test]
    fn control_point_csv_preserves_doubles(
        rows in proptest::collection::vec(
            (-1e9f64..1e9, -1e9f64..1e9, -1e9f64..1e9, -1e9f64..1e9),
            1..10,
        ),
    ) {
        let mut text = String::from("src_x,src_y,dst_x,dst_y\n");
        for (sx, sy, dx, dy) in &rows {
            text.push_str(&format!("{sx},{sy},{dx},{dy}\n"));
        }
        let pairs = read_control_points(text.as_bytes()).unwrap();
        prop_assert_eq!(pairs.len(), rows.len());
        for (pair, (sx, sy, dx, dy)) in pairs.iter().zip(&rows) {
            prop_assert_eq!(pair.source.x.to_bits(), sx.to_bits());
            prop_assert_eq!(pair.source.y.to_bits(), sy.to_bits());
            prop_assert_eq!(pair.target.x.to_bits(), dx.to_bits());
            prop_assert_eq!(pair.target.y.to_bits(), dy.to_bits());
        }
    }

    /// Deduplication removes every same-layer geometric duplicate and
    /// accounts for each removal, leaving no duplicate pair behind.
    #[test]
    fn dedupe_leaves_no_duplicate_pairs(doc in document()) {
        let total = doc.entities.len();
        let (clean, fixes) = dedupe_entities(doc);
        prop_assert_eq!(clean.entities.len() + fixes.len(), total);
        for i in 0..clean.entities.len() {
            for j in (i + 1)..clean.entities.len() {
                let (a, b) = (&clean.entities[i], &clean.entities[j]);
                prop_assert!(
                    !(a.layer == b.layer && a.geometry == b.geometry),
                    "entities {} and {} are identical", a.handle, b.handle
                );
            }
        }
    }
}
