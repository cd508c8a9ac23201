//! Hand-rolled SVG output: a small line-chart builder plus the quadrotor
//! trajectory picture. No plotting dependency; the canvas is fixed at
//! 800x600 and every coordinate is formatted with fixed precision, so the
//! bytes are deterministic for identical inputs.

use ccpmo::quadrotor::QuadrotorParams;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 70.0;

enum Item {
    Line { pts: Vec<(f64, f64)>, color: String, dashed: bool },
    Dots { pts: Vec<(f64, f64)>, color: String },
}

/// Line chart with optional log axes. Add data, then `render`.
pub struct Chart {
    title: String,
    xlabel: String,
    ylabel: String,
    log_x: bool,
    log_y: bool,
    items: Vec<Item>,
    legend: Vec<(String, String)>,
}

impl Chart {
    pub fn new(title: &str, xlabel: &str, ylabel: &str) -> Self {
        Self {
            title: title.to_string(),
            xlabel: xlabel.to_string(),
            ylabel: ylabel.to_string(),
            log_x: false,
            log_y: false,
            items: Vec::new(),
            legend: Vec::new(),
        }
    }

    pub fn with_log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn with_log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn line(&mut self, pts: &[(f64, f64)], color: &str, label: Option<&str>) {
        if let Some(l) = label {
            self.legend.push((l.to_string(), color.to_string()));
        }
        self.items.push(Item::Line { pts: pts.to_vec(), color: color.to_string(), dashed: false });
    }

    pub fn dashed_line(&mut self, pts: &[(f64, f64)], color: &str, label: Option<&str>) {
        if let Some(l) = label {
            self.legend.push((l.to_string(), color.to_string()));
        }
        self.items.push(Item::Line { pts: pts.to_vec(), color: color.to_string(), dashed: true });
    }

    pub fn dots(&mut self, pts: &[(f64, f64)], color: &str) {
        self.items.push(Item::Dots { pts: pts.to_vec(), color: color.to_string() });
    }

    fn tx(&self, v: f64) -> f64 {
        if self.log_x {
            v.log10()
        } else {
            v
        }
    }

    fn ty(&self, v: f64) -> f64 {
        if self.log_y {
            v.log10()
        } else {
            v
        }
    }

    pub fn render(self) -> String {
        // Fit the axis ranges to the transformed data with a 5% pad.
        let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
        for item in &self.items {
            let pts = match item {
                Item::Line { pts, .. } | Item::Dots { pts, .. } => pts,
            };
            for &(x, y) in pts {
                let (x, y) = (self.tx(x), self.ty(y));
                if x.is_finite() && y.is_finite() {
                    x0 = x0.min(x);
                    x1 = x1.max(x);
                    y0 = y0.min(y);
                    y1 = y1.max(y);
                }
            }
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |a: &mut f64, b: &mut f64| {
            let w = (*b - *a).abs().max(1e-12);
            *a -= 0.05 * w;
            *b += 0.05 * w;
        };
        pad(&mut x0, &mut x1);
        pad(&mut y0, &mut y1);

        let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
        let py = |y: f64| {
            HEIGHT - MARGIN_BOTTOM - (y - y0) / (y1 - y0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
        };

        let mut s = String::new();
        s.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"28\" font-size=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        ));

        // Axes with 5 ticks each; grid lines behind the data.
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let (xp, yp) = (px(xv), py(yv));
            s.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>\n",
                xp,
                py(y0),
                xp,
                py(y1)
            ));
            s.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>\n",
                px(x0),
                yp,
                px(x1),
                yp
            ));
            let xlab = tick_label(xv, self.log_x);
            let ylab = tick_label(yv, self.log_y);
            s.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>\n",
                xp,
                HEIGHT - MARGIN_BOTTOM + 20.0,
                xlab
            ));
            s.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\" font-family=\"sans-serif\">{}</text>\n",
                MARGIN_LEFT - 8.0,
                yp + 4.0,
                ylab
            ));
        }
        s.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>\n",
            MARGIN_LEFT,
            MARGIN_TOP,
            WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
            HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>\n",
            (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
            HEIGHT - 18.0,
            escape(&self.xlabel)
        ));
        s.push_str(&format!(
            "<text x=\"22\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\" transform=\"rotate(-90 22 {:.2})\">{}</text>\n",
            (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
            (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
            escape(&self.ylabel)
        ));

        for item in &self.items {
            match item {
                Item::Line { pts, color, dashed } => {
                    let coords: Vec<String> = pts
                        .iter()
                        .map(|&(x, y)| format!("{:.2},{:.2}", px(self.tx(x)), py(self.ty(y))))
                        .collect();
                    let dash = if *dashed { " stroke-dasharray=\"6,4\"" } else { "" };
                    s.push_str(&format!(
                        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"{}/>\n",
                        coords.join(" "),
                        color,
                        dash
                    ));
                }
                Item::Dots { pts, color } => {
                    for &(x, y) in pts {
                        s.push_str(&format!(
                            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{}\"/>\n",
                            px(self.tx(x)),
                            py(self.ty(y)),
                            color
                        ));
                    }
                }
            }
        }

        for (i, (label, color)) in self.legend.iter().enumerate() {
            let y = MARGIN_TOP + 16.0 + 18.0 * i as f64;
            s.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                WIDTH - MARGIN_RIGHT - 170.0,
                y - 4.0,
                WIDTH - MARGIN_RIGHT - 140.0,
                y - 4.0,
                color
            ));
            s.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" font-family=\"sans-serif\">{}</text>\n",
                WIDTH - MARGIN_RIGHT - 132.0,
                y,
                escape(label)
            ));
        }

        s.push_str("</svg>\n");
        s
    }
}

fn tick_label(v: f64, log: bool) -> String {
    let v = if log { 10f64.powf(v) } else { v };
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (0.01..10000.0).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s.is_empty() || s == "-" {
            "0".to_string()
        } else {
            s
        }
    } else {
        format!("{v:.2e}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Top-down picture of sampled quadrotor runs: obstacles, goal disc, start
/// marker, and one polyline per trial, green when the trial satisfied the
/// constraint and red otherwise.
pub fn quadrotor_trajectories(
    params: &QuadrotorParams,
    trials: &[(Vec<[f64; 4]>, bool)],
    title: &str,
) -> String {
    // Fixed world window covering the default geometry with headroom.
    let (wx0, wx1, wy0, wy1) = (-3.0, 14.0, -3.0, 14.0);
    let scale = ((WIDTH - 40.0) / (wx1 - wx0)).min((HEIGHT - 60.0) / (wy1 - wy0));
    let px = |x: f64| 20.0 + (x - wx0) * scale;
    let py = |y: f64| HEIGHT - 30.0 - (y - wy0) * scale;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));

    for poly in &params.obstacles {
        let coords: Vec<String> =
            poly.iter().map(|p| format!("{:.2},{:.2}", px(p[0]), py(p[1]))).collect();
        s.push_str(&format!(
            "<polygon points=\"{}\" fill=\"#bbbbbb\" stroke=\"#555555\"/>\n",
            coords.join(" ")
        ));
    }
    s.push_str(&format!(
        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"#2266cc\" stroke-width=\"2\" stroke-dasharray=\"5,4\"/>\n",
        px(params.goal_center[0]),
        py(params.goal_center[1]),
        params.goal_radius * scale
    ));

    for (traj, feasible) in trials {
        let mut coords = vec![format!("{:.2},{:.2}", px(params.start[0]), py(params.start[2]))];
        coords.extend(traj.iter().map(|st| format!("{:.2},{:.2}", px(st[0]), py(st[2]))));
        let color = if *feasible { "#1a9641" } else { "#d7191c" };
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\" opacity=\"0.45\"/>\n",
            coords.join(" "),
            color
        ));
    }

    s.push_str(&format!(
        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"#000000\"/>\n",
        px(params.start[0]),
        py(params.start[2])
    ));
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" font-family=\"sans-serif\">start</text>\n",
        px(params.start[0]) + 8.0,
        py(params.start[2]) + 4.0
    ));
    s.push_str("</svg>\n");
    s
}
