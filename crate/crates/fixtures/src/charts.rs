use docsynth::chart::{ChartSeed, ChartType, Locale, SeedMeta};

struct SeedSrc {
    id: &'static str,
    chart_type: ChartType,
    title: &'static str,
    topic: &'static str,
    x_label: &'static str,
    y_label: &'static str,
    table: &'static str,
}

const SEEDS: &[SeedSrc] = &[
    SeedSrc {
        id: "area-visitors",
        chart_type: ChartType::Area,
        title: "Monthly Visitors",
        topic: "Travel & Tourism",
        x_label: "Month",
        y_label: "Visitors",
        table: "Month,Visitors\nJan,1200\nFeb,1350\nMar,1580\nApr,1420\nMay,1710\n",
    },
    SeedSrc {
        id: "bar-sales",
        chart_type: ChartType::Bar,
        title: "Monthly Sales",
        topic: "Business & Finance",
        x_label: "Month",
        y_label: "Sales",
        table: "Month,Sales\nJan,120\nFeb,135\nMar,98\nApr,143\nMay,160\nJun,151\n",
    },
    SeedSrc {
        id: "box-scores",
        chart_type: ChartType::Box,
        title: "Score Distribution",
        topic: "Education",
        x_label: "Group",
        y_label: "Score",
        table: "series,x,y\nNorth,1,62\nNorth,2,70\nNorth,3,75\nNorth,4,81\nNorth,5,90\n\
                South,1,55\nSouth,2,64\nSouth,3,68\nSouth,4,77\nSouth,5,85\n",
    },
    SeedSrc {
        id: "heatmap-orders",
        chart_type: ChartType::Heatmap,
        title: "Weekly Orders",
        topic: "Business & Finance",
        x_label: "Day",
        y_label: "Region",
        table: "Day,Mon,Tue,Wed\nNorth,12,15,9\nSouth,8,11,14\nEast,10,7,13\n",
    },
    SeedSrc {
        id: "histogram-hours",
        chart_type: ChartType::Histogram,
        title: "Hours Distribution",
        topic: "Health & Medicine",
        x_label: "Hours",
        y_label: "Frequency",
        table: "Hours,Frequency\n0-2,5\n2-4,12\n4-6,18\n6-8,9\n8-10,3\n",
    },
    SeedSrc {
        id: "line-revenue",
        chart_type: ChartType::Line,
        title: "Monthly Revenue",
        topic: "Business & Finance",
        x_label: "Month",
        y_label: "Revenue",
        table: "Month,Revenue,Cost\nJan,82.5,60.2\nFeb,88.1,61\nMar,91.4,66.3\nApr,95,70.8\nMay,99.2,72.5\n",
    },
    SeedSrc {
        id: "pie-share",
        chart_type: ChartType::Pie,
        title: "Sales Share",
        topic: "Business & Finance",
        x_label: "Region",
        y_label: "Share",
        table: "Region,Share\nNorth,32\nSouth,27\nEast,25\nWest,16\n",
    },
    SeedSrc {
        id: "scatter-price",
        chart_type: ChartType::Scatter,
        title: "Price Comparison",
        topic: "Technology & Innovation",
        x_label: "Price",
        y_label: "Orders",
        table: "series,x,y\nNorth,12.5,30\nNorth,15,36\nNorth,18,41\nSouth,10,22\nSouth,14,29\nSouth,20,44\n",
    },
    SeedSrc {
        id: "stacked-bar-channels",
        chart_type: ChartType::StackedBar,
        title: "Quarterly Orders",
        topic: "Business & Finance",
        x_label: "Quarter",
        y_label: "Orders",
        table: "Quarter,Online,Offline\nQ1,45,60\nQ2,52,58\nQ3,61,55\nQ4,70,50\n",
    },
];

fn script(src: &SeedSrc) -> String {
    format!(
        "import pandas as pd\nimport matplotlib.pyplot as plt\n\n\
         df = pd.read_csv(\"table.csv\")\n\
         ax = df.plot(kind=\"{kind}\", title=\"{title}\")\n\
         ax.set_xlabel(\"{x}\")\nax.set_ylabel(\"{y}\")\nplt.savefig(\"chart.png\")\n",
        kind = src.chart_type.as_str(),
        title = src.title,
        x = src.x_label,
        y = src.y_label,
    )
}

pub fn chart_seeds() -> Vec<ChartSeed> {
    SEEDS
        .iter()
        .map(|s| {
            let meta = SeedMeta {
                chart_type: s.chart_type,
                title: s.title.into(),
                topic: s.topic.into(),
                x_label: s.x_label.into(),
                y_label: s.y_label.into(),
                locale: Locale::En,
            };
            ChartSeed::new(s.id, script(s), s.table, meta)
        })
        .collect()
}
