"""High-precision reference values for the geodesy tests (mpmath, 50 digits)."""
import mpmath as mp

mp.mp.dps = 50
A = mp.mpf(6378137)
F = 1 / mp.mpf("298.257223563")
E2 = F * (2 - F)


def lla_to_ecef(lat, lon, h):
    lat, lon = mp.radians(lat), mp.radians(lon)
    n = A / mp.sqrt(1 - E2 * mp.sin(lat) ** 2)
    return ((n + h) * mp.cos(lat) * mp.cos(lon),
            (n + h) * mp.cos(lat) * mp.sin(lon),
            (n * (1 - E2) + h) * mp.sin(lat))


def meridian_arc(lat):
    m = lambda p: A * (1 - E2) / (1 - E2 * mp.sin(p) ** 2) ** mp.mpf(1.5)
    return mp.quad(m, [0, lat])


def lat_north_of(lat_deg, dist):
    lat0 = mp.radians(lat_deg)
    s0 = meridian_arc(lat0)
    return mp.degrees(mp.findroot(lambda p: meridian_arc(p) - s0 - dist, lat0 + dist / A))


if __name__ == "__main__":
    print("ottawa ecef", [mp.nstr(v, 20) for v in lla_to_ecef(mp.mpf("45.4215"), mp.mpf("-75.6972"), 100)])
    print("pole z", mp.nstr(lla_to_ecef(90, 0, 0)[2], 20))
    lat2 = lat_north_of(mp.mpf("45.4215"), 1000)
    p1 = lla_to_ecef(mp.mpf("45.4215"), mp.mpf("-75.6972"), 100)
    p2 = lla_to_ecef(lat2, mp.mpf("-75.6972"), 100)
    d = [b - a for a, b in zip(p1, p2)]
    lat, lon = mp.radians(mp.mpf("45.4215")), mp.radians(mp.mpf("-75.6972"))
    up = (mp.cos(lat) * mp.cos(lon), mp.cos(lat) * mp.sin(lon), mp.sin(lat))
    north = (-mp.sin(lat) * mp.cos(lon), -mp.sin(lat) * mp.sin(lon), mp.cos(lat))
    east = (-mp.sin(lon), mp.cos(lon), 0)
    r = mp.sqrt(sum(v * v for v in d))
    dot = lambda a, b: sum(x * y for x, y in zip(a, b))
    print("north-1km lat", mp.nstr(lat2, 20))
    print("el_deg", mp.nstr(mp.degrees(mp.asin(dot(d, up) / r)), 15))
    print("az_deg", mp.nstr(mp.degrees(mp.atan2(dot(d, east), dot(d, north))), 15))
    print("range", mp.nstr(r, 15))
    print("gnb los 36", mp.nstr(mp.mpf(18) / 36 + mp.exp(-1) * (1 - mp.mpf(18) / 36), 20))
