#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use verdict_loss::save_predictions;
use verdict_loss_core::{PredictionRecord, VerdictLabel};

/// Published dev-set confusion matrices (rows gold S/R/N, columns predicted
/// S/R/N) with their label accuracy captions.
pub const PUBLISHED_MATRICES: [(&str, [[u64; 3]; 3], &str); 24] = [
    ("3a", [[5976, 222, 468], [470, 5153, 1043], [1051, 1184, 4431]], "77.81"),
    ("3b", [[5862, 214, 590], [427, 4906, 1333], [922, 897, 4847]], "78.08"),
    ("3c", [[5976, 201, 489], [510, 4981, 1175], [1066, 991, 4609]], "77.84"),
    ("3d", [[5785, 303, 578], [372, 5098, 1196], [845, 1079, 4742]], "78.13"),
    ("3e", [[5919, 196, 551], [455, 4876, 1335], [1001, 894, 4771]], "77.84"),
    ("3f", [[5766, 239, 661], [444, 4958, 1264], [864, 962, 4840]], "77.83"),
    ("3g", [[5948, 221, 497], [461, 4969, 1236], [1014, 939, 4713]], "78.16"),
    ("3h", [[5979, 228, 459], [457, 5031, 1178], [1080, 939, 4647]], "78.29"),
    ("4a", [[5985, 222, 459], [436, 5061, 1169], [1032, 1042, 4592]], "78.20"),
    ("4b", [[5817, 238, 611], [349, 5171, 1146], [854, 1032, 4780]], "78.85"),
    ("4c", [[6011, 188, 467], [437, 5068, 1161], [1019, 940, 4707]], "78.94"),
    ("4d", [[5858, 258, 550], [359, 5214, 1093], [858, 1112, 4696]], "78.85"),
    ("4e", [[5942, 214, 510], [406, 5076, 1184], [922, 1028, 4716]], "78.68"),
    ("4f", [[5806, 246, 614], [323, 5148, 1195], [852, 1004, 4810]], "78.83"),
    ("4g", [[6024, 165, 477], [411, 4989, 1266], [1007, 869, 4790]], "79.02"),
    ("4h", [[5938, 187, 541], [397, 5087, 1182], [884, 971, 4811]], "79.19"),
    ("5a", [[6073, 153, 440], [357, 5127, 1182], [964, 865, 4837]], "80.19"),
    ("5b", [[5783, 220, 663], [238, 5291, 1137], [693, 938, 5035]], "80.55"),
    ("5c", [[6032, 148, 486], [321, 5092, 1253], [913, 878, 4875]], "80.00"),
    ("5d", [[5995, 159, 512], [299, 5151, 1216], [826, 864, 4976]], "80.62"),
    ("5e", [[6117, 129, 420], [361, 4996, 1309], [962, 771, 4933]], "80.24"),
    ("5f", [[5913, 227, 526], [275, 5410, 981], [780, 1064, 4822]], "80.73"),
    ("5g", [[6072, 162, 432], [314, 5239, 1113], [915, 981, 4770]], "80.41"),
    ("5h", [[5901, 213, 552], [237, 5238, 1191], [766, 901, 4999]], "80.70"),
];

/// One record per matrix cell count, claim ids `0..`.
pub fn records_from_matrix(m: &[[u64; 3]; 3]) -> Vec<PredictionRecord> {
    let mut out = Vec::new();
    for gold in VerdictLabel::ALL {
        for pred in VerdictLabel::ALL {
            for _ in 0..m[gold.index()][pred.index()] {
                out.push(PredictionRecord::new(out.len() as u64, gold, pred));
            }
        }
    }
    out
}

pub fn write_matrix_file(dir: &Path, name: &str, m: &[[u64; 3]; 3]) -> PathBuf {
    let path = dir.join(format!("{name}.jsonl"));
    save_predictions(&records_from_matrix(m), &path).unwrap();
    path
}

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_verdict-loss"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("VERDICT_LOSS_SEED").output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}
