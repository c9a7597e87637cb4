#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>

#include "fakenews/fakenews.hpp"
#include "support.hpp"

using namespace fakenews;

namespace {

struct RunResult {
    int code = -1;
    std::string out, err;
};

class Cli : public ::testing::Test {
protected:
    test::TempDir dir{"fakenews-cli"};

    RunResult run(const std::string& args) const {
        const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
        const std::string cmd = std::string(FAKENEWS_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
        const int status = std::system(cmd.c_str());
        RunResult r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = io::read_file(out);
        r.err = io::read_file(err);
        return r;
    }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    std::string write_posts(const std::string& name, std::size_t n, std::uint64_t seed = 7) const {
        write_corpus(test::synthetic_posts(n, seed), dir / name, CorpusFormat::tsv);
        return path(name);
    }

    /// 768-dim blob vectors for every id in `ds`, one triple per encoder.
    std::string write_encoders(const Dataset& ds) const {
        std::string flags;
        std::uint64_t seed = 1;
        for (const std::string name : {"distilbert-base-nli-mean-tokens", "roberta-large-nli-stsb-mean-tokens",
                                       "xlm-r-large-en-ko-nli-ststb"}) {
            const auto set = embeddings::EmbeddingSet::from_matrix(
                name, ds.ids(), test::gaussian_blobs(ds.labels(), 768, 0.05, seed++), embeddings::DType::f32);
            embeddings::write_embeddings(set, dir / name);
            flags += " --embeddings " + path(name);
        }
        return flags;
    }

    io::json ledger(const std::string& out_dir, const std::string& verb) const {
        return io::read_json(dir / out_dir / (verb + ".ledger.json"));
    }
};

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

} // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("corpus validate").code, 2);
    EXPECT_EQ(run("eval tdt --data x.tsv --model nope").code, 2);
    const auto help = run("--help");
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("eval"), std::string::npos);
}

TEST_F(Cli, DataErrorsExitOne) {
    EXPECT_EQ(run("corpus validate --input " + path("missing.tsv")).code, 1);
    std::ofstream(dir / "bad.tsv") << "id\ttweet\tlabel\n1\thello\tmaybe\n";
    const auto r = run("corpus validate --input " + path("bad.tsv"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("maybe"), std::string::npos);
}

TEST_F(Cli, CorpusValidateAndExport) {
    const auto in = write_posts("posts.tsv", 40);
    const auto r = run("--out-dir " + path("o") + " corpus validate --input " + in);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("records: 40"), std::string::npos);
    EXPECT_NE(r.out.find("real: 20"), std::string::npos);
    EXPECT_EQ(ledger("o", "corpus-validate")["records"], 40);
    ASSERT_EQ(run("--out-dir " + path("o") + " corpus export --input " + in + " --output " + path("posts.csv")).code, 0);
    const auto back = load_corpus(dir / "posts.csv");
    EXPECT_EQ(back.texts(), load_corpus(in).texts());
}

TEST_F(Cli, PreprocessAndFeaturize) {
    const auto in = write_posts("posts.tsv", 25);
    const std::string o = " --out-dir " + path("o");
    ASSERT_EQ(run(o + " preprocess --input " + in + " --output " + path("clean.tsv")).code, 0);
    const auto cleaned = io::read_file(dir / "clean.tsv");
    EXPECT_EQ(line_count(cleaned), 26u);
    EXPECT_EQ(cleaned.find('#'), std::string::npos);
    ASSERT_EQ(run(o + " preprocess --keep-hashtags --keep-case --input " + in + " --output " + path("raw.tsv")).code, 0);
    EXPECT_EQ(run(o + " featurize --input " + in + " --output " + path("f.tsv")).code, 2);
    ASSERT_EQ(run(o + " featurize --handcrafted --input " + in + " --output " + path("f.tsv")).code, 0);
    const auto feats = io::read_file(dir / "f.tsv");
    EXPECT_EQ(line_count(feats), 26u);
    EXPECT_EQ(feats.substr(0, feats.find('\n')), "id\tword_max_len\tword_min_len\tword_avg_len\tword_len_std\t"
              "upper_initial_count\tlower_initial_count\tdigit_count\tletter_count\tspace_count\tpunct_count\t"
              "hashtag_count\tvowel_a\tvowel_e\tvowel_i\tvowel_o\tvowel_u");
}

TEST_F(Cli, LsaFitTransformAndEmbeddingValidation) {
    const auto in = write_posts("posts.tsv", 120);
    const std::string o = " --out-dir " + path("o");
    ASSERT_EQ(run(o + " lsa fit --n 200 --d 16 --input " + in + " --model-dir " + path("lsa")).code, 0);
    const auto r = run(o + " lsa transform --model-dir " + path("lsa") + " --input " + in + " --output " + path("z"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto z = embeddings::read_embeddings(dir / "z");
    EXPECT_EQ(z.count(), 120u);
    EXPECT_EQ(z.dim(), 16u);
    const auto v = run(o + " embeddings validate --path " + path("z.bin") + " --corpus " + in);
    ASSERT_EQ(v.code, 0) << v.err;
    EXPECT_NE(v.out.find("sha256: " + embeddings::payload_checksum(dir / "z")), std::string::npos);
    const auto more = write_posts("more.tsv", 130);
    const auto bad = run(o + " embeddings validate --path " + path("z") + " --corpus " + more);
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.err.find("10 dataset id(s) missing"), std::string::npos);
}

TEST_F(Cli, TrainBasePredictAndRenderConfusion) {
    const auto train = write_posts("train.tsv", 300, 1), test_in = write_posts("test.tsv", 80, 2);
    const std::string o = " --out-dir " + path("o");
    const auto t = run(o + " train base --model lsa-lr --n 400 --d 24 --data " + train + " --model-dir " + path("m"));
    ASSERT_EQ(t.code, 0) << t.err;
    const auto p = run(o + " predict --model-dir " + path("m") + " --input " + test_in);
    ASSERT_EQ(p.code, 0) << p.err;
    const auto preds = io::read_file(dir / "o" / "predictions.tsv");
    EXPECT_EQ(line_count(preds), 81u);
    const auto l = ledger("o", "predict");
    EXPECT_GE(l["scores"]["f1"].get<double>(), 0.85);
    EXPECT_TRUE(std::filesystem::exists(dir / "o" / "confusion.svg"));
    ASSERT_EQ(run(o + " render confusion --ledger " + path("o/predict.ledger.json") + " --output " + path("c.svg")).code, 0);
    ASSERT_EQ(run(o + " render confusion --matrix 5,1,2,7 --title T --output " + path("d.svg")).code, 0);
    EXPECT_NE(io::read_file(dir / "d.svg").find(">7</text>"), std::string::npos);
}

TEST_F(Cli, EvalTdtLedgerReplaysExactly) {
    const auto in = write_posts("posts.tsv", 240);
    const auto a = run("--seed 5 --out-dir " + path("a") + " eval tdt --model lsa-svm --n 300 --d 12 --unstratified --keep-stopwords --data " + in);
    ASSERT_EQ(a.code, 0) << a.err;
    const auto la = ledger("a", "eval-tdt");
    EXPECT_EQ(la["config"]["seed"], 5);
    EXPECT_EQ(la["config"]["d"], 12);
    EXPECT_EQ(la["config"]["model"], "lsa-svm");
    EXPECT_EQ(la["config"]["unstratified"], true);
    EXPECT_EQ(la["config"]["keep-case"], false);
    EXPECT_EQ(la["sizes"]["train"], 180);
    for (const auto* part : {"train", "dev", "test"})
        EXPECT_TRUE(std::filesystem::exists(dir / "a" / (std::string("confusion-") + part + ".svg")));
    const auto b = run("--config " + path("a/eval-tdt.ledger.json") + " --out-dir " + path("b") + " eval tdt");
    ASSERT_EQ(b.code, 0) << b.err;
    const auto lb = ledger("b", "eval-tdt");
    EXPECT_EQ(lb["scores"], la["scores"]);
    EXPECT_EQ(lb["seed"], 5);
    auto ca = la["config"], cb = lb["config"];
    ca.erase("out-dir");
    cb.erase("out-dir");
    EXPECT_EQ(ca, cb);
}

TEST_F(Cli, EvalCvReportsFoldsAndMean) {
    const auto in = write_posts("posts.tsv", 200);
    const auto r = run("--out-dir " + path("o") + " eval cv --k 4 --model handcrafted-svm --data " + in);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto l = ledger("o", "eval-cv");
    EXPECT_EQ(l["protocol"], "cv4");
    EXPECT_EQ(l["scores"].size(), 4u);
    double sum = 0;
    for (const auto& [k, v] : l["scores"].items()) sum += v.get<double>();
    EXPECT_NEAR(l["mean"].get<double>(), sum / 4, 1e-12);
}

TEST_F(Cli, GridIsolatesFailingConfigurations) {
    const auto in = write_posts("posts.tsv", 200);
    const auto r = run("--out-dir " + path("o") + " eval grid --model lsa-lr --features 500 --dims 64 512 --threads 2 --data " + in);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto l = ledger("o", "eval-grid");
    EXPECT_EQ(l["grid"]["ranked"].size(), 1u);
    EXPECT_EQ(l["grid"]["failures"].size(), 1u);
    EXPECT_EQ(l["grid"]["failures"][0]["config"]["d"], 512);
    EXPECT_TRUE(std::filesystem::exists(dir / "o" / "grid.json"));
}

TEST_F(Cli, ExplainVariance) {
    const auto in = write_posts("posts.tsv", 300);
    const auto r = run("--out-dir " + path("o") + " explain variance --top-k 5 --data " + in);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(ledger("o", "explain-variance")["ranking"]["fake"].size(), 5u);
    EXPECT_NE(r.out.find("fake:"), std::string::npos);
}

TEST_F(Cli, NeuralAndLinearStacks) {
    const Dataset ds = test::synthetic_posts(300, 3);
    write_corpus(ds, dir / "posts.tsv", CorpusFormat::tsv);
    const std::string emb = write_encoders(ds), o = " --out-dir " + path("o"), in = path("posts.tsv");
    const auto nn = run(o + " train nn-stack --epochs 2 --data " + in + emb + " --model-dir " + path("nn"));
    ASSERT_EQ(nn.code, 0) << nn.err;
    EXPECT_EQ(ledger("o", "train-nn-stack")["mlp"]["layer_dims"][0], 2576);
    const auto pn = run(o + " stack predict --model-dir " + path("nn") + " --input " + in + emb);
    ASSERT_EQ(pn.code, 0) << pn.err;
    EXPECT_EQ(ledger("o", "stack-predict")["model_kind"], "fakenews-neural-stack");

    const auto missing = run(o + " train nn-stack --epochs 1 --data " + in + " --model-dir " + path("nn2"));
    EXPECT_EQ(missing.code, 1);

    const auto lin = run(o + " stack train-linear --bases lsa-lr handcrafted-svm distilbert-lr --n 300 --d 16 --stack-folds 3 --data " +
                         in + emb + " --model-dir " + path("lin"));
    ASSERT_EQ(lin.code, 0) << lin.err;
    const auto pl = run(o + " predict --model-dir " + path("lin") + " --input " + in + emb);
    ASSERT_EQ(pl.code, 0) << pl.err;
    EXPECT_EQ(ledger("o", "predict")["model_kind"], "fakenews-linear-stack");
    EXPECT_GE(ledger("o", "predict")["scores"]["f1"].get<double>(), 0.9);
}
