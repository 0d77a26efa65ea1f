// Scratch harness for tuning the synthetic host against the evaluation
// thresholds. Not part of the test suite.

use vqmark::attacks::{apply_attack, AttackKind, AttackSpec, CropFill};
use vqmark::codebook::{train_lbg_traced, train_sofm, LbgParams, SofmParams};
use vqmark::image::{extract_channel, to_blocks};
use vqmark::metrics;
use vqmark::partition::build_partition;
use vqmark::testimg::{demo_watermark, synthetic_natural};
use vqmark::vqcodec::{decode_image, encode_image};
use vqmark::watermark::{embed, extract_from_image, EmbedKey};

fn main() {
    let t0 = std::time::Instant::now();
    let host = synthetic_natural(512, 512, 3, 2024);
    let plane = extract_channel(&host, 0).unwrap();
    let grid = to_blocks(&plane, 4).unwrap();
    println!("host+blocks: {:?}", t0.elapsed());

    let t = std::time::Instant::now();
    let params = SofmParams::for_size(256, 7).unwrap();
    let cb = train_sofm(&grid.blocks, &params).unwrap();
    let sofm_time = t.elapsed();
    println!("sofm train: {:?}", sofm_time);

    let t = std::time::Instant::now();
    let (cb_lbg, trace) = train_lbg_traced(&grid.blocks, &LbgParams::new(256, 7)).unwrap();
    let lbg_time = t.elapsed();
    println!("lbg train: {:?} ({} iters)", lbg_time, trace.len());

    let pc = build_partition(&cb).unwrap();
    let enc = encode_image(&host, &cb).unwrap();
    let wm = demo_watermark(64);
    let key = EmbedKey(31337);
    let marked = embed(&enc, &pc, &wm, key).unwrap();
    let marked_img = decode_image(&marked, &cb).unwrap();

    let plain_img = decode_image(&enc, &cb).unwrap();
    println!("plain  PSNR: {:.3}", metrics::psnr(&host, &plain_img).unwrap());
    println!("marked PSNR: {:.3}", metrics::psnr(&host, &marked_img).unwrap());

    let enc_lbg = encode_image(&host, &cb_lbg).unwrap();
    let plain_lbg = decode_image(&enc_lbg, &cb_lbg).unwrap();
    println!("lbg    PSNR: {:.3}", metrics::psnr(&host, &plain_lbg).unwrap());

    // no-attack extraction sanity
    let got = extract_from_image(&marked_img, &cb, &pc, key, 64).unwrap();
    println!(
        "no-attack: NC {:.4} BCR {:.2} MAE {:.4}",
        metrics::nc(&wm, &got).unwrap(),
        metrics::bcr(&wm, &got).unwrap(),
        metrics::mae(&wm, &got).unwrap()
    );

    let mut run = |label: &str, spec: AttackSpec| {
        let attacked = apply_attack(&marked_img, &spec, Some(&host)).unwrap();
        let got = extract_from_image(&attacked, &cb, &pc, key, 64).unwrap();
        println!(
            "{label:28} NC {:.4} BCR {:6.2} MAE {:.4} PSNR {:.2}",
            metrics::nc(&wm, &got).unwrap(),
            metrics::bcr(&wm, &got).unwrap(),
            metrics::mae(&wm, &got).unwrap(),
            metrics::psnr(&host, &attacked).unwrap(),
        );
    };

    for w in [3usize, 5, 7] {
        let mut s = AttackSpec::new(AttackKind::Median);
        s.params.window = Some(w);
        run(&format!("median {w}"), s);
        let mut s = AttackSpec::new(AttackKind::Wiener);
        s.params.window = Some(w);
        run(&format!("wiener {w}"), s);
    }
    for q in [4.0, 8.0, 32.0, 64.0, 128.0] {
        let mut s = AttackSpec::new(AttackKind::JpegLike);
        s.params.q = Some(q);
        run(&format!("jpegLike {q}"), s);
    }
    let mut s = AttackSpec::new(AttackKind::CropQuarter);
    s.params.fill = Some(CropFill::White);
    run("cropQuarter white", s);

    // --- codebook size scan for the robustness battery -------------------
    println!("\n== size scan (512 host) ==");
    for size in [16usize, 32, 64, 128] {
        let params = SofmParams::for_size(size, 7).unwrap();
        let cb = train_sofm(&grid.blocks, &params).unwrap();
        let pc = build_partition(&cb).unwrap();
        let enc = encode_image(&host, &cb).unwrap();
        let marked = embed(&enc, &pc, &wm, key).unwrap();
        let marked_img = decode_image(&marked, &cb).unwrap();
        let base_psnr = metrics::psnr(&host, &marked_img).unwrap();
        print!("size {size:4} marked PSNR {base_psnr:6.2} |");
        for q in [32.0, 64.0, 128.0] {
            let mut s = AttackSpec::new(AttackKind::JpegLike);
            s.params.q = Some(q);
            let attacked = apply_attack(&marked_img, &s, None).unwrap();
            let got = extract_from_image(&attacked, &cb, &pc, key, 64).unwrap();
            print!(" j{q}: {:6.2}", metrics::bcr(&wm, &got).unwrap());
        }
        for w in [3usize, 5, 7] {
            let mut s = AttackSpec::new(AttackKind::Median);
            s.params.window = Some(w);
            let attacked = apply_attack(&marked_img, &s, None).unwrap();
            let got = extract_from_image(&attacked, &cb, &pc, key, 64).unwrap();
            print!(" m{w}: {:.3}", metrics::nc(&wm, &got).unwrap());
        }
        let mut s = AttackSpec::new(AttackKind::CropQuarter);
        s.params.fill = Some(CropFill::White);
        let attacked = apply_attack(&marked_img, &s, None).unwrap();
        let got = extract_from_image(&attacked, &cb, &pc, key, 64).unwrap();
        println!(" crop MAE {:.4}", metrics::mae(&wm, &got).unwrap());
    }

    // --- 256x256 trio: sofm vs lbg ---------------------------------------
    println!("\n== sofm vs lbg on 256x256 trio ==");
    for seed in [11u64, 22, 33] {
        let img = synthetic_natural(256, 256, 3, seed);
        let blocks = to_blocks(&extract_channel(&img, 0).unwrap(), 4).unwrap().blocks;

        let t = std::time::Instant::now();
        let cb_s = train_sofm(&blocks, &SofmParams::for_size(256, seed).unwrap()).unwrap();
        let ts = t.elapsed();
        let t = std::time::Instant::now();
        let (cb_l, _) = train_lbg_traced(&blocks, &LbgParams::new(256, seed)).unwrap();
        let tl = t.elapsed();

        let ps = metrics::psnr(&img, &decode_image(&encode_image(&img, &cb_s).unwrap(), &cb_s).unwrap()).unwrap();
        let pl = metrics::psnr(&img, &decode_image(&encode_image(&img, &cb_l).unwrap(), &cb_l).unwrap()).unwrap();
        println!(
            "seed {seed}: sofm {ps:.3} dB in {ts:?} | lbg {pl:.3} dB in {tl:?} | dPSNR {:+.3} ratio {:.2}",
            ps - pl,
            ts.as_secs_f64() / tl.as_secs_f64()
        );
    }

    println!("total: {:?}", t0.elapsed());
}
