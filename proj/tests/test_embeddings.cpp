#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "fakenews/embeddings_io.hpp"
#include "support.hpp"

using namespace fakenews;
using namespace fakenews::embeddings;

namespace {

void write_raw(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream f(p, std::ios::binary);
    f << bytes;
}

/// Payload bytes built with memcpy, independent of io::append_le (host is little-endian).
template <typename T>
std::string raw_bytes(const std::vector<T>& v) {
    std::string s(v.size() * sizeof(T), '\0');
    std::memcpy(s.data(), v.data(), s.size());
    return s;
}

void write_triple(const std::filesystem::path& prefix, const std::string& manifest, const std::string& ids,
                  const std::string& payload) {
    write_raw(prefix.string() + ".manifest.json", manifest);
    write_raw(prefix.string() + ".ids.txt", ids);
    write_raw(prefix.string() + ".bin", payload);
}

} // namespace

TEST(Embeddings, ReadsHandWrittenTriple) {
    test::TempDir dir;
    write_triple(dir / "e",
                 R"({"model_id":"distilbert-base-nli-mean-tokens","dim":3,"count":2,"dtype":"f32",)"
                 R"("preprocessing_id":"clean:lower","checkpoint":"rev-abc"})",
                 "a\nb\n", raw_bytes<float>({1.f, 2.f, 3.f, 4.f, 5.f, 6.5f}));
    const auto s = read_embeddings(dir / "e");
    EXPECT_EQ(s.count(), 2u);
    EXPECT_EQ(s.dim(), 3u);
    EXPECT_EQ(s.manifest().dtype, DType::f32);
    EXPECT_EQ(s.manifest().extra.at("checkpoint"), "rev-abc");
    EXPECT_EQ(s.ids(), (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(s.value(1, 2), 6.5);
    EXPECT_TRUE(std::holds_alternative<std::vector<float>>(s.data()));
}

TEST(Embeddings, AnyOfTheThreeFileNamesWorks) {
    const auto p = paths_for("/x/set.ids.txt");
    EXPECT_EQ(p.manifest, "/x/set.manifest.json");
    EXPECT_EQ(p.payload, "/x/set.bin");
    EXPECT_EQ(paths_for("/x/set").ids, "/x/set.ids.txt");
}

TEST(Embeddings, RoundTripF64IsBitExact) {
    test::TempDir dir;
    Eigen::MatrixXd m(3, 4);
    m << 0.1, -0.2, 1e-300, 3.5, std::nextafter(1.0, 2.0), -0.0, 7, 8, 9, 10, 11, 1.0 / 3.0;
    const auto s = EmbeddingSet::from_matrix("m", {"z", "y", "x"}, m);
    write_embeddings(s, dir / "s");
    const auto back = read_embeddings(dir / "s");
    EXPECT_TRUE(back == s);
    EXPECT_EQ(back.ids(), (std::vector<std::string>{"z", "y", "x"}));
    const auto& a = std::get<std::vector<double>>(s.data());
    const auto& b = std::get<std::vector<double>>(back.data());
    EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)), 0);
    EXPECT_EQ(io::read_file(dir / "s.bin"), raw_bytes(a));
}

TEST(Embeddings, F32StaysF32) {
    test::TempDir dir;
    const auto s = EmbeddingSet::from_matrix("m", {"a"}, Eigen::MatrixXd::Constant(1, 5, 0.1), DType::f32);
    write_embeddings(s, dir / "s");
    EXPECT_EQ(std::filesystem::file_size(dir / "s.bin"), 20u);
    const auto back = read_embeddings(dir / "s");
    EXPECT_EQ(back.manifest().dtype, DType::f32);
    EXPECT_TRUE(back == s);
}

TEST(Embeddings, EmptySet) {
    test::TempDir dir;
    write_triple(dir / "e", R"({"model_id":"m","dim":768,"count":0,"dtype":"f32"})", "", "");
    const auto s = read_embeddings(dir / "e");
    EXPECT_EQ(s.count(), 0u);
    EXPECT_EQ(s.matrix().rows(), 0);
}

TEST(Embeddings, ShortRowsAreFormatError) {
    test::TempDir dir;
    write_triple(dir / "e", R"({"model_id":"m","dim":768,"count":1,"dtype":"f32"})", "a\n",
                 raw_bytes(std::vector<float>(767, 0.f)));
    EXPECT_THROW(read_embeddings(dir / "e"), FormatError);
}

TEST(Embeddings, IdCountMismatchIsFormatError) {
    test::TempDir dir;
    write_triple(dir / "e", R"({"model_id":"m","dim":1,"count":2,"dtype":"f64"})", "a\n",
                 raw_bytes<double>({1, 2}));
    EXPECT_THROW(read_embeddings(dir / "e"), FormatError);
}

TEST(Embeddings, NanIsDataErrorNamingId) {
    test::TempDir dir;
    write_triple(dir / "e", R"({"model_id":"m","dim":2,"count":2,"dtype":"f64"})", "good\nbad-one\n",
                 raw_bytes<double>({1, 2, 3, std::numeric_limits<double>::quiet_NaN()}));
    try {
        read_embeddings(dir / "e");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("bad-one"), std::string::npos);
    }
}

TEST(Embeddings, DuplicateIdsRejected) {
    EXPECT_THROW(EmbeddingSet::from_matrix("m", {"a", "a"}, Eigen::MatrixXd::Zero(2, 2)), ValidationError);
}

TEST(Embeddings, UnsupportedDtypeOrByteOrder) {
    test::TempDir dir;
    write_triple(dir / "e", R"({"model_id":"m","dim":1,"count":1,"dtype":"f16"})", "a\n", "ab");
    EXPECT_THROW(read_embeddings(dir / "e"), FormatError);
    write_triple(dir / "e", R"({"model_id":"m","dim":1,"count":1,"dtype":"f32","byte_order":"big"})", "a\n", "abcd");
    EXPECT_THROW(read_embeddings(dir / "e"), FormatError);
}

TEST(Embeddings, ChecksumIsSha256OfPayload) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    test::TempDir dir;
    write_triple(dir / "e", R"({"model_id":"m","dim":1,"count":0,"dtype":"f32"})", "", "");
    EXPECT_EQ(payload_checksum(dir / "e.manifest.json"), sha256_hex(""));
}

TEST(Align, PermutesToDatasetOrder) {
    Eigen::MatrixXd m(2, 2);
    m << 2, 2, 1, 1;
    const auto s = EmbeddingSet::from_matrix("m", {"b", "a"}, m);
    Dataset ds;
    ds.records = {{"a", "", Label::real}, {"b", "", Label::fake}};
    const Eigen::MatrixXd A = align(s, ds);
    EXPECT_EQ(A(0, 0), 1);
    EXPECT_EQ(A(1, 0), 2);
}

TEST(Align, IndependentOfSourceRowOrder) {
    std::mt19937_64 rng(4);
    const auto ds = test::synthetic_dataset(50);
    Eigen::MatrixXd m = test::gaussian_blobs(ds.labels(), 6, 1.0, 9);
    std::vector<std::size_t> perm(50);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd pm(50, 6);
    std::vector<std::string> pids;
    for (std::size_t i = 0; i < 50; ++i) {
        pm.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(perm[i]));
        pids.push_back(ds.records[perm[i]].id);
    }
    const auto a = EmbeddingSet::from_matrix("m", ds.ids(), m), b = EmbeddingSet::from_matrix("m", pids, pm);
    EXPECT_EQ(align(a, ds), align(b, ds));
    EXPECT_EQ(align(a, ds), m);
}

TEST(Align, MissingIdsListedUpToTen) {
    const auto s = EmbeddingSet::from_matrix("m", {"a"}, Eigen::MatrixXd::Zero(1, 1));
    const auto ds = test::synthetic_dataset(15);
    try {
        align(s, ds);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("15 dataset id(s) missing"), std::string::npos);
        EXPECT_NE(msg.find("r9"), std::string::npos);
        EXPECT_EQ(msg.find("r10"), std::string::npos);
    }
}
