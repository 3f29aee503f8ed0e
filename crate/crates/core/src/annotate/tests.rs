use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::mesh::cuboid;
use crate::render::{rasterize, solo_pixel_counts, Camera, Material, RenderSettings};
use crate::scene::{Model, SceneObject};
use crate::{Pose, Vector3};

fn stats(id: u32, visible: usize, solo: usize, collided: bool) -> InstanceStats {
    InstanceStats {
        object_id: id,
        class_id: 0,
        bbox_px: (visible > 0).then_some(PixelBox { x: 0, y: 0, w: 10, h: 10 }),
        visible_pixels: visible,
        solo_pixels: solo,
        visibility: (visible as f64 / solo.max(1) as f64).min(1.0),
        collided,
    }
}

fn cube(id: u32, x: f64, z: f64) -> SceneObject {
    let model = Model::single(Arc::new(cuboid(Vector3::splat(0.2))), Arc::new(Material::matte([0.7; 3])));
    SceneObject {
        id,
        class_id: Some(id as usize - 1),
        model: Arc::new(model),
        pose: Pose::from_translation(Vector3::new(x, 0.0, z)),
        active: true,
        collided: false,
    }
}

fn scene(objects: Vec<SceneObject>) -> Scene {
    Scene { objects, plane_z: 0.0, rng_seed: 0, scene_index: 0 }
}

fn top_down() -> Camera {
    Camera { position: Vector3::new(0.0, 0.0, 2.0), ..Camera::default() }
}

fn run(s: &Scene, camera: &Camera) -> Vec<InstanceStats> {
    let out = rasterize(s, camera, &[], 0.5);
    let solo = solo_pixel_counts(s, camera, &RenderSettings::default());
    extract_instances(&out, s, &solo).unwrap()
}

#[test]
fn lone_cube_fully_visible() {
    let s = scene(vec![cube(1, 0.0, 0.1)]);
    let st = run(&s, &top_down());
    assert_eq!(st.len(), 1);
    assert_eq!(st[0].visibility, 1.0);
    assert_eq!(st[0].visible_pixels, st[0].solo_pixels);
    let b = st[0].bbox_px.unwrap();
    assert!(b.x + b.w <= 640 && b.y + b.h <= 640);
}

#[test]
fn hidden_cube_has_zero_visibility() {
    // A larger cube directly above hides the small one.
    let mut big = cube(2, 0.0, 1.0);
    big.model = Arc::new(Model::single(Arc::new(cuboid(Vector3::splat(0.6))), Arc::new(Material::matte([0.2; 3]))));
    let s = scene(vec![cube(1, 0.0, 0.1), big]);
    let st = run(&s, &top_down());
    assert_eq!(st[0].visible_pixels, 0);
    assert_eq!(st[0].visibility, 0.0);
    assert_eq!(st[0].bbox_px, None);
    assert!(st[0].solo_pixels > 0);
}

#[test]
fn half_occluded_visibility() {
    let (s, camera) = crate::render::tests::half_occluded_scene();
    let st = run(&s, &camera);
    let cube_stats = st.iter().find(|s| s.object_id == 1).unwrap();
    assert!((cube_stats.visibility - 0.5).abs() <= 0.02, "{}", cube_stats.visibility);
}

#[test]
fn bbox_is_tight_over_id_buffer() {
    let s = scene(vec![cube(1, -0.3, 0.1), cube(2, 0.25, 0.1)]);
    let camera = top_down();
    let out = rasterize(&s, &camera, &[], 0.5);
    let solo = solo_pixel_counts(&s, &camera, &RenderSettings::default());
    for st in extract_instances(&out, &s, &solo).unwrap() {
        let b = st.bbox_px.unwrap();
        let mut count = 0;
        for y in 0..out.height {
            for x in 0..out.width {
                if out.id_at(x, y) == st.object_id {
                    count += 1;
                    assert!(x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h);
                }
            }
        }
        assert_eq!(count, st.visible_pixels);
        // Each edge row / column holds at least one pixel of the object.
        let has = |x: u32, y: u32| out.id_at(x, y) == st.object_id;
        assert!((b.x..b.x + b.w).any(|x| has(x, b.y)));
        assert!((b.x..b.x + b.w).any(|x| has(x, b.y + b.h - 1)));
        assert!((b.y..b.y + b.h).any(|y| has(b.x, y)));
        assert!((b.y..b.y + b.h).any(|y| has(b.x + b.w - 1, y)));
    }
}

#[test]
fn extraction_errors() {
    let s = scene(vec![cube(1, 0.0, 0.1)]);
    let camera = top_down();
    let mut out = rasterize(&s, &camera, &[], 0.5);
    assert!(matches!(extract_instances(&out, &s, &BTreeMap::new()), Err(AnnotateError::MissingSoloCount(1))));
    let solo = BTreeMap::from([(1, 10)]);
    out.instance_ids[0] = 9;
    assert!(matches!(extract_instances(&out, &s, &solo), Err(AnnotateError::UnknownInstance(9))));
    out.instance_ids.pop();
    assert!(matches!(extract_instances(&out, &s, &solo), Err(AnnotateError::BufferMismatch { .. })));
}

#[test]
fn filter_all_collided_drops_image() {
    let out = filter_instances(&[stats(1, 500, 500, true), stats(2, 400, 400, true)], 0.25, 16);
    assert!(out.kept.is_empty());
    assert!(out.drop_image);
    assert_eq!(out.removed.len(), 2);
}

#[test]
fn filter_defaults_keep_visible_object() {
    let t = FilterThresholds::default();
    let out = filter_instances(&[stats(1, 500, 500, false)], t.min_visibility, t.min_pixels);
    assert_eq!(out.kept.len(), 1);
    assert!(!out.drop_image);
}

#[test]
fn filter_threshold_is_inclusive() {
    let s = stats(1, 25, 100, false);
    assert_eq!(s.visibility, 0.25);
    assert_eq!(filter_instances(std::slice::from_ref(&s), 0.25, 25).kept.len(), 1);
    assert_eq!(filter_instances(std::slice::from_ref(&s), 0.26, 0).kept.len(), 0);
    assert_eq!(filter_instances(&[s], 0.0, 26).kept.len(), 0);
}

#[test]
fn occluded_and_collided_leave_one() {
    let out =
        filter_instances(&[stats(1, 500, 500, false), stats(2, 0, 300, false), stats(3, 400, 400, true)], 0.25, 16);
    assert_eq!(out.kept.iter().map(|s| s.object_id).collect::<Vec<_>>(), vec![1]);
}

fn record(name: &str, boxes: &[(usize, PixelBox)]) -> ImageRecord {
    ImageRecord {
        file_name: name.into(),
        width: 640,
        height: 640,
        instances: boxes
            .iter()
            .enumerate()
            .map(|(i, &(class_id, b))| InstanceStats {
                object_id: i as u32 + 1,
                class_id,
                bbox_px: Some(b),
                visible_pixels: (b.w * b.h) as usize,
                solo_pixels: (b.w * b.h) as usize,
                visibility: 1.0,
                collided: false,
            })
            .collect(),
    }
}

fn cats() -> Vec<String> {
    vec!["Holder".into(), "SunGear".into()]
}

#[test]
fn coco_single_box() {
    let bx = PixelBox { x: 64, y: 64, w: 128, h: 128 };
    let coco = build_coco(&[record("img_0.ppm", &[(1, bx)])], &cats()).unwrap();
    assert_eq!(coco.annotations.len(), 1);
    let a = &coco.annotations[0];
    assert_eq!(a.area, 16384.0);
    assert_eq!(a.bbox, [64.0, 64.0, 128.0, 128.0]);
    assert_eq!(a.category_id, 2);
    assert_eq!(a.iscrowd, 0);
}

#[test]
fn coco_omits_empty_images_and_is_byte_stable() {
    let bx = PixelBox { x: 1, y: 2, w: 3, h: 4 };
    let images = vec![record("a.ppm", &[(0, bx)]), record("b.ppm", &[]), record("c.ppm", &[(1, bx), (0, bx)])];
    let first = write_coco(&images, &cats()).unwrap();
    let second = write_coco(&images, &cats()).unwrap();
    assert_eq!(first, second);
    let coco = parse_coco(&first).unwrap();
    assert_eq!(coco.images.iter().map(|i| i.file_name.as_str()).collect::<Vec<_>>(), vec!["a.ppm", "c.ppm"]);
    assert_eq!(coco, build_coco(&images, &cats()).unwrap());
    let text = String::from_utf8(first).unwrap();
    let pos = |k: &str| text.find(k).unwrap();
    assert!(pos("\"images\"") < pos("\"annotations\"") && pos("\"annotations\"") < pos("\"categories\""));
}

#[test]
fn coco_duplicate_file_names() {
    let images = vec![record("a.ppm", &[]), record("a.ppm", &[])];
    assert!(matches!(write_coco(&images, &cats()), Err(AnnotateError::DuplicateFileName(_))));
}

#[test]
fn coco_parse_validation() {
    let ok = r#"{"images":[{"id":1,"file_name":"x.png","width":10,"height":10}],
        "annotations":[{"id":1,"image_id":1,"category_id":1,"bbox":[0,0,2,2],"area":4,"segmentation":[]}],
        "categories":[{"id":1,"name":"a"}],"info":{}}"#;
    assert_eq!(parse_coco(ok.as_bytes()).unwrap().annotations[0].iscrowd, 0);
    assert!(matches!(parse_coco(b"{not json"), Err(AnnotateError::Json(_))));
    let dangling = ok.replace("\"image_id\":1", "\"image_id\":5");
    assert!(matches!(parse_coco(dangling.as_bytes()), Err(AnnotateError::MissingImage { .. })));
    let bad_cat = ok.replace("\"category_id\":1", "\"category_id\":3");
    assert!(matches!(parse_coco(bad_cat.as_bytes()), Err(AnnotateError::MissingCategory { .. })));
    let dup = ok.replace(r#"[{"id":1,"name":"a"}]"#, r#"[{"id":1,"name":"a"},{"id":1,"name":"b"}]"#);
    assert!(matches!(parse_coco(dup.as_bytes()), Err(AnnotateError::DuplicateId { kind: "category", id: 1 })));
}

#[test]
fn yolo_conversion_values() {
    let images = vec![
        record("img_0.ppm", &[(1, PixelBox { x: 64, y: 64, w: 128, h: 128 })]),
        record("img_1.ppm", &[(0, PixelBox { x: 0, y: 0, w: 640, h: 640 })]),
    ];
    let conv = coco_to_yolo(&build_coco(&images, &cats()).unwrap()).unwrap();
    assert!(conv.warnings.is_empty());
    assert_eq!(conv.class_names, cats());
    assert_eq!(format_yolo(&conv.labels["img_0.ppm"]), "1 0.200000 0.200000 0.200000 0.200000\n");
    assert_eq!(format_yolo(&conv.labels["img_1.ppm"]), "0 0.500000 0.500000 1.000000 1.000000\n");
}

#[test]
fn yolo_class_index_is_category_rank() {
    let coco = CocoDataset {
        images: vec![CocoImage { id: 7, file_name: "a.png".into(), width: 100, height: 50 }],
        annotations: vec![CocoAnnotation {
            id: 1,
            image_id: 7,
            category_id: 40,
            bbox: [10.0, 5.0, 20.0, 10.0],
            area: 200.0,
            iscrowd: 0,
        }],
        categories: vec![CocoCategory { id: 40, name: "late".into() }, CocoCategory { id: 3, name: "early".into() }],
    };
    let conv = coco_to_yolo(&coco).unwrap();
    assert_eq!(conv.class_names, vec!["early".to_string(), "late".into()]);
    let r = conv.labels["a.png"][0];
    assert_eq!(r.class, 1);
    assert_eq!((r.cx, r.cy, r.w, r.h), (0.2, 0.2, 0.2, 0.2));
}

#[test]
fn yolo_clips_out_of_bounds_boxes() {
    let coco = CocoDataset {
        images: vec![CocoImage { id: 1, file_name: "a.png".into(), width: 100, height: 100 }],
        annotations: vec![
            CocoAnnotation {
                id: 1,
                image_id: 1,
                category_id: 1,
                bbox: [90.0, -10.0, 20.0, 30.0],
                area: 600.0,
                iscrowd: 0,
            },
            CocoAnnotation { id: 2, image_id: 1, category_id: 1, bbox: [200.0, 0.0, 5.0, 5.0], area: 25.0, iscrowd: 0 },
        ],
        categories: vec![CocoCategory { id: 1, name: "a".into() }],
    };
    let conv = coco_to_yolo(&coco).unwrap();
    assert_eq!(conv.warnings.len(), 3);
    let r = conv.labels["a.png"][0];
    assert!((r.cx - 0.95).abs() < 1e-12 && (r.w - 0.1).abs() < 1e-12 && (r.h - 0.2).abs() < 1e-12);
    assert_eq!(conv.labels["a.png"].len(), 1);
}

#[test]
fn yolo_conversion_missing_image() {
    let coco = CocoDataset {
        images: vec![],
        annotations: vec![CocoAnnotation {
            id: 1,
            image_id: 1,
            category_id: 1,
            bbox: [0.0, 0.0, 1.0, 1.0],
            area: 1.0,
            iscrowd: 0,
        }],
        categories: vec![CocoCategory { id: 1, name: "a".into() }],
    };
    assert!(matches!(coco_to_yolo(&coco), Err(AnnotateError::MissingImage { .. })));
}

#[test]
fn yolo_parsing() {
    let labels = parse_yolo("0 0.5 0.5 1.0 1.0\n\n1 0.25 0.5 0.1 0.2 0.75\n", 640, 640, 2).unwrap();
    assert_eq!(labels[0].bbox, crate::eval::BBox::new(0.0, 0.0, 640.0, 640.0));
    assert_eq!(labels[0].confidence, None);
    assert_eq!(labels[1].confidence, Some(0.75));

    let err = parse_yolo("0 0.5 0.5 1.0 1.0\n0 0.5 0.5 1.0\n", 640, 640, 1).unwrap_err();
    assert!(matches!(err, AnnotateError::Yolo { line: 2, .. }), "{err}");
    assert!(parse_yolo("0 0.5 0.5 1.1 1.0", 640, 640, 1).is_err());
    assert!(parse_yolo("0 0.5 0.5 1.0000005 1.0", 640, 640, 1).is_ok());
    assert!(parse_yolo("3 0.5 0.5 0.1 0.1", 640, 640, 2).is_err());
    assert!(parse_yolo("0 0.5 0.5 0.0 0.1", 640, 640, 1).is_err());
    assert!(parse_yolo("0 0.5 0.5 0.1 0.1 1.5", 640, 640, 1).is_err());
    assert!(parse_yolo("x 0.5 0.5 0.1 0.1", 640, 640, 1).is_err());
}

proptest! {
    #[test]
    fn filter_is_idempotent(
        entries in prop::collection::vec((0usize..500, 1usize..500, any::<bool>()), 0..8),
        min_vis in 0.0..1.0f64,
        min_px in 0usize..64,
    ) {
        let st: Vec<_> = entries.iter().enumerate().map(|(i, &(v, s, c))| stats(i as u32, v, s, c)).collect();
        let once = filter_instances(&st, min_vis, min_px);
        let twice = filter_instances(&once.kept, min_vis, min_px);
        prop_assert!(twice.removed.is_empty());
        prop_assert_eq!(twice.kept, once.kept.clone());
        prop_assert_eq!(once.kept.len() + once.removed.len(), st.len());
    }

    #[test]
    fn coco_yolo_round_trip(
        boxes in prop::collection::vec((0u32..600, 0u32..440, 1u32..40, 1u32..200, 0usize..2), 1..6),
        width in 640u32..1000,
        height in 640u32..900,
    ) {
        let bx: Vec<_> = boxes.iter().map(|&(x, y, w, h, c)| (c, PixelBox { x, y, w, h })).collect();
        let mut img = record("r.ppm", &bx);
        img.width = width;
        img.height = height;
        let coco = build_coco(&[img], &cats()).unwrap();
        let conv = coco_to_yolo(&coco).unwrap();
        let text = format_yolo(&conv.labels["r.ppm"]);
        let back = parse_yolo(&text, width, height, 2).unwrap();
        for (label, ann) in back.iter().zip(&coco.annotations) {
            let [x, y, w, h] = ann.bbox;
            prop_assert!((label.bbox.x - x).abs() <= 0.5);
            prop_assert!((label.bbox.y - y).abs() <= 0.5);
            prop_assert!((label.bbox.w - w).abs() <= 0.5);
            prop_assert!((label.bbox.h - h).abs() <= 0.5);
            prop_assert_eq!(label.class as u64 + 1, ann.category_id);
        }
        // Normalized values survive a second pass within the printed precision.
        let again = yolo_to_coco(&conv.labels["r.ppm"], width, height);
        for ((_, b), r) in again.iter().zip(&conv.labels["r.ppm"]) {
            prop_assert!(((b.x + b.w / 2.0) / width as f64 - r.cx).abs() < 1e-6);
        }
    }
}
